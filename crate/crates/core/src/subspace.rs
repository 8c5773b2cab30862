//! Interpreting the trained classifier: logit-surface gradients from a
//! kernel-weighted local linear smoother, standardized per coordinate, and
//! the active subspace (mean gradient plus leading eigenvectors of the
//! gradient covariance), with bootstrap uncertainty bands.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{bootstrap_split, split, EventTable, SplitParts, SplitSpec};
use crate::error::{Error, Result};
use crate::forest::{fit, Forest, ForestConfig};
use crate::numeric::sorted_quantile;
use crate::rng::stream_rng;
use crate::teststats::PROB_CLAMP_EPS;

/// Gaussian-kernel local linear smoother settings. The kernel's standard
/// deviation along axis j is sd(Z_j)/bandwidth, so larger bandwidths mean
/// narrower kernels.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SmootherConfig {
    pub bandwidth: f64,
    /// Probability clamp before the logit.
    pub epsilon: f64,
}

impl Default for SmootherConfig {
    fn default() -> Self {
        Self { bandwidth: 0.5, epsilon: PROB_CLAMP_EPS }
    }
}

/// Kernel weights below this are dropped from each local fit.
const WEIGHT_FLOOR: f64 = 1e-12;
/// Ridge added to a singular weighted design.
const RIDGE: f64 = 1e-8;
/// Floor on gradient standard errors to keep standardization finite.
const SD_FLOOR: f64 = 1e-12;

/// Classifier logits log(h/(1−h)) with h clamped to [ε, 1−ε].
pub fn logit_surface(forest: &Forest, t: &EventTable, epsilon: f64) -> Result<Vec<f64>> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::Config(format!("epsilon {epsilon} outside (0, 0.5)")));
    }
    let h = forest.predict_proba(t)?;
    Ok(h.iter()
        .map(|&v| {
            let c = v.clamp(epsilon, 1.0 - epsilon);
            (c / (1.0 - c)).ln()
        })
        .collect())
}

/// Gradient estimates of the logit surface at every input row: raw local
/// slopes, their WLS standard errors, and the standardized slopes used by
/// the subspace decomposition. A slope whose standard error is at the
/// floor (flat surface, zero residuals) standardizes to zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GradientField {
    n: usize,
    d: usize,
    /// Row-major evaluation points.
    points: Vec<f64>,
    /// Row-major raw slopes β̂ⱼ(Zᵢ).
    slopes: Vec<f64>,
    /// Row-major standardized slopes β̂ⱼ(Zᵢ)/ŝd(β̂ⱼ(Zᵢ)).
    gradients: Vec<f64>,
    /// Row-major WLS standard errors of the raw slopes.
    sd_estimates: Vec<f64>,
    /// Local fits that needed the ridge fallback.
    pub ridge_fallbacks: usize,
}

impl GradientField {
    pub fn n_points(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    /// Raw local-linear slope at point `i`.
    pub fn slope(&self, i: usize) -> &[f64] {
        &self.slopes[i * self.d..(i + 1) * self.d]
    }

    /// Standardized gradient at point `i`.
    pub fn gradient(&self, i: usize) -> &[f64] {
        &self.gradients[i * self.d..(i + 1) * self.d]
    }

    pub fn sd(&self, i: usize) -> &[f64] {
        &self.sd_estimates[i * self.d..(i + 1) * self.d]
    }
}

/// At every row of `points`, fit logits ≈ α + βᵀ(z − zᵢ) by weighted least
/// squares with per-axis Gaussian weights of scale sd_j/bandwidth, and
/// return the slopes standardized by their WLS standard errors.
pub fn local_linear_gradients(
    points: &EventTable,
    logits: &[f64],
    cfg: &SmootherConfig,
) -> Result<GradientField> {
    let n = points.n_rows();
    let d = points.n_cols();
    if logits.len() != n {
        return Err(Error::Shape(format!("{} logits for {n} points", logits.len())));
    }
    if n <= d + 1 {
        return Err(Error::Size(format!("need more than d+1 = {} points, have {n}", d + 1)));
    }
    if cfg.bandwidth <= 0.0 || !cfg.bandwidth.is_finite() {
        return Err(Error::Config("bandwidth must be positive".into()));
    }

    // Per-axis kernel scales sd_j / h.
    let mut scales = Vec::with_capacity(d);
    for j in 0..d {
        let col = points.column(j);
        let sd = crate::numeric::sample_sd(col);
        if sd <= 0.0 {
            return Err(Error::Domain(format!(
                "feature '{}' has zero sample sd; cannot scale the kernel",
                points.names()[j]
            )));
        }
        scales.push(sd / cfg.bandwidth);
    }

    // Flatten to row-major for cache-friendly access.
    let mut flat = vec![0.0; n * d];
    for j in 0..d {
        let col = points.column(j);
        for i in 0..n {
            flat[i * d + j] = col[i];
        }
    }

    let fits: Vec<(Vec<f64>, Vec<f64>, bool)> = (0..n)
        .into_par_iter()
        .map(|i| local_fit(i, &flat, logits, &scales, n, d))
        .collect::<Result<_>>()?;

    let mut slopes = Vec::with_capacity(n * d);
    let mut gradients = Vec::with_capacity(n * d);
    let mut sds = Vec::with_capacity(n * d);
    let mut ridge_fallbacks = 0;
    for (raw, s, ridged) in fits {
        for (b, sd) in raw.iter().zip(&s) {
            gradients.push(if *sd <= SD_FLOOR { 0.0 } else { b / sd });
        }
        slopes.extend(raw);
        sds.extend(s);
        ridge_fallbacks += usize::from(ridged);
    }
    Ok(GradientField {
        n,
        d,
        points: flat,
        slopes,
        gradients,
        sd_estimates: sds,
        ridge_fallbacks,
    })
}

fn local_fit(
    center: usize,
    flat: &[f64],
    logits: &[f64],
    scales: &[f64],
    n: usize,
    d: usize,
) -> Result<(Vec<f64>, Vec<f64>, bool)> {
    let p = d + 1;
    let z0 = &flat[center * d..(center + 1) * d];
    let mut xtwx = DMatrix::<f64>::zeros(p, p);
    let mut xtwy = DVector::<f64>::zeros(p);
    let mut weight_sum = 0.0;
    let mut row = vec![0.0; p];

    // accumulate normal equations; also keep the contributing rows for the
    // residual pass
    let mut members: Vec<(usize, f64)> = Vec::new();
    for k in 0..n {
        let zk = &flat[k * d..(k + 1) * d];
        let mut dist2 = 0.0;
        for j in 0..d {
            let u = (zk[j] - z0[j]) / scales[j];
            dist2 += u * u;
            if dist2 > 60.0 {
                break;
            }
        }
        let w = (-0.5 * dist2).exp();
        if w < WEIGHT_FLOOR {
            continue;
        }
        row[0] = 1.0;
        for j in 0..d {
            row[j + 1] = zk[j] - z0[j];
        }
        for a in 0..p {
            let wa = w * row[a];
            xtwy[a] += wa * logits[k];
            for b in a..p {
                xtwx[(a, b)] += wa * row[b];
            }
        }
        weight_sum += w;
        members.push((k, w));
    }
    for a in 0..p {
        for b in 0..a {
            xtwx[(a, b)] = xtwx[(b, a)];
        }
    }

    let (coef, inv, ridged) = match solve_spd(&xtwx, &xtwy) {
        Some(v) => (v.0, v.1, false),
        None => {
            let mut ridged_m = xtwx.clone();
            for a in 0..p {
                ridged_m[(a, a)] += RIDGE;
            }
            let (c, i) = solve_spd(&ridged_m, &xtwy).ok_or_else(|| {
                Error::Numerical("weighted design singular even with ridge".into())
            })?;
            (c, i, true)
        }
    };

    // Homoskedastic WLS coefficient covariance: σ̂² (XᵀWX)⁻¹ with
    // σ̂² = Σ w r² / max(Σw − p, 1).
    let mut rss = 0.0;
    for &(k, w) in &members {
        let zk = &flat[k * d..(k + 1) * d];
        let mut fit_val = coef[0];
        for j in 0..d {
            fit_val += coef[j + 1] * (zk[j] - z0[j]);
        }
        let r = logits[k] - fit_val;
        rss += w * r * r;
    }
    let dof = (weight_sum - p as f64).max(1.0);
    let sigma2 = rss / dof;

    let mut raw = Vec::with_capacity(d);
    let mut sds = Vec::with_capacity(d);
    for j in 0..d {
        let sd = (sigma2 * inv[(j + 1, j + 1)]).max(0.0).sqrt().max(SD_FLOOR);
        raw.push(coef[j + 1]);
        sds.push(sd);
    }
    Ok((raw, sds, ridged))
}

/// Cholesky solve returning the solution and the inverse, or None if the
/// matrix is not positive definite.
fn solve_spd(m: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<(DVector<f64>, DMatrix<f64>)> {
    let chol = m.clone().cholesky()?;
    Some((chol.solve(rhs), chol.inverse()))
}

/// Bootstrap bands for the subspace quantities.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubspaceBootstrap {
    pub cycles: usize,
    pub alpha: f64,
    /// Per-component draws of the mean standardized gradient, cycle-major.
    pub mean_gradient_draws: Vec<Vec<f64>>,
    pub mean_gradient_bands: Vec<(f64, f64)>,
    /// Per-eigenvector draws (sign-fixed against the point estimate).
    pub eigenvector_draws: Vec<Vec<Vec<f64>>>,
    pub eigenvector_bands: Vec<Vec<(f64, f64)>>,
    pub eigenvalue_bands: Vec<(f64, f64)>,
}

/// Mean standardized gradient plus eigenstructure of the gradient
/// covariance; columns of `eigenvectors` are orthonormal, eigenvalues
/// sorted descending.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubspaceReport {
    pub variable_names: Vec<String>,
    pub mean_gradient: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    /// eigenvectors[k][j]: component j of the k-th eigenvector.
    pub eigenvectors: Vec<Vec<f64>>,
    pub bootstrap: Option<SubspaceBootstrap>,
}

impl SubspaceReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "variables": self.variable_names,
            "mean_gradient": self.mean_gradient,
            "eigenvalues": self.eigenvalues,
            "eigenvectors": self.eigenvectors,
            "bootstrap": self.bootstrap.as_ref().map(|b| serde_json::json!({
                "cycles": b.cycles,
                "alpha": b.alpha,
                "mean_gradient_bands": b.mean_gradient_bands,
                "mean_gradient_draws": b.mean_gradient_draws,
                "eigenvector_bands": b.eigenvector_bands,
                "eigenvector_draws": b.eigenvector_draws,
                "eigenvalue_bands": b.eigenvalue_bands,
            })),
        })
    }
}

/// Mean and covariance eigenstructure of the standardized gradients:
/// Ĉ = (1/N) Σ (g − ḡ)(g − ḡ)ᵀ, eigenvalues descending, each eigenvector's
/// first non-negligible component made positive.
pub fn active_subspace(field: &GradientField, names: &[String]) -> Result<SubspaceReport> {
    let n = field.n_points();
    let d = field.dim();
    if names.len() != d {
        return Err(Error::Shape(format!("{} names for {d} coordinates", names.len())));
    }
    if field.gradients.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite gradient estimates".into()));
    }

    let mut mean = vec![0.0; d];
    for i in 0..n {
        for (j, g) in field.gradient(i).iter().enumerate() {
            mean[j] += g;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }

    let mut cov = DMatrix::<f64>::zeros(d, d);
    for i in 0..n {
        let g = field.gradient(i);
        for a in 0..d {
            let da = g[a] - mean[a];
            for b in a..d {
                cov[(a, b)] += da * (g[b] - mean[b]);
            }
        }
    }
    for a in 0..d {
        for b in a..d {
            let v = cov[(a, b)] / n as f64;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }

    let eig = cov.symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let mut eigenvalues = Vec::with_capacity(d);
    let mut eigenvectors = Vec::with_capacity(d);
    for &k in &order {
        eigenvalues.push(eig.eigenvalues[k]);
        let col = eig.eigenvectors.column(k);
        let mut v: Vec<f64> = col.iter().copied().collect();
        // Deterministic sign: first component of non-trivial magnitude positive.
        if let Some(lead) = v.iter().find(|c| c.abs() > 1e-12) {
            if *lead < 0.0 {
                for c in &mut v {
                    *c = -*c;
                }
            }
        }
        eigenvectors.push(v);
    }

    Ok(SubspaceReport {
        variable_names: names.to_vec(),
        mean_gradient: mean,
        eigenvalues,
        eigenvectors,
        bootstrap: None,
    })
}

/// One full pass over already-split parts: train, smooth, decompose.
fn subspace_from_parts(
    parts: &SplitParts,
    cfg: &ForestConfig,
    scfg: &SmootherConfig,
) -> Result<SubspaceReport> {
    let forest = fit(&parts.train_background, &parts.train_experimental, cfg)?;
    // Gradients are evaluated on the combined held-out background and
    // experimental rows; the combination tracks the classifier surface over
    // the region both samples occupy.
    let eval = parts.test_background.concat(&parts.test_experimental)?;
    let logits = logit_surface(&forest, &eval, scfg.epsilon)?;
    let field = local_linear_gradients(&eval, &logits, scfg)?;
    active_subspace(&field, eval.names())
}

fn subspace_once(
    x: &EventTable,
    w: &EventTable,
    cfg: &ForestConfig,
    scfg: &SmootherConfig,
    split_spec: &SplitSpec,
) -> Result<SubspaceReport> {
    let parts = split(x, w, split_spec)?;
    subspace_from_parts(&parts, cfg, scfg)
}

/// Point estimate of the active subspace through the full pipeline.
pub fn estimate_subspace(
    x: &EventTable,
    w: &EventTable,
    cfg: &ForestConfig,
    scfg: &SmootherConfig,
    split_spec: &SplitSpec,
) -> Result<SubspaceReport> {
    subspace_once(x, w, cfg, scfg, split_spec)
}

/// Point estimate plus bootstrap bands: B re-drawn, re-trained pipelines.
/// Each bootstrap eigenvector k is sign-aligned to the point estimate at
/// the anchor coordinate argmaxᵢ |M̂ᵢₖ| before the bands are formed.
#[allow(clippy::too_many_arguments)]
pub fn bootstrap_subspace(
    x: &EventTable,
    w: &EventTable,
    cfg: &ForestConfig,
    scfg: &SmootherConfig,
    split_spec: &SplitSpec,
    cycles: usize,
    alpha: f64,
    seed: u64,
) -> Result<SubspaceReport> {
    if cycles < 2 {
        return Err(Error::Config("bootstrap needs at least 2 cycles".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("alpha {alpha} outside (0,1)")));
    }
    let mut point = subspace_once(x, w, cfg, scfg, split_spec)?;
    let d = point.mean_gradient.len();

    let anchors: Vec<usize> = point
        .eigenvectors
        .iter()
        .map(|v| {
            v.iter()
                .enumerate()
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                .map(|(i, _)| i)
                .unwrap_or(0)
        })
        .collect();

    let replicates: Vec<SubspaceReport> = (0..cycles)
        .into_par_iter()
        .map(|b| -> Result<SubspaceReport> {
            let mut rng = stream_rng(seed, "subspace-bootstrap", b as u64);
            let parts = bootstrap_split(x, w, split_spec, &mut rng)?;
            let sub_cfg = ForestConfig { seed: rng.random(), ..cfg.clone() };
            subspace_from_parts(&parts, &sub_cfg, scfg)
        })
        .collect::<Result<_>>()?;

    // Sign-fix each replicate eigenvector against the point estimate.
    let mut mean_draws: Vec<Vec<f64>> = Vec::with_capacity(cycles);
    let mut vec_draws: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(cycles); d];
    let mut val_draws: Vec<Vec<f64>> = vec![Vec::with_capacity(cycles); d];
    for rep in &replicates {
        mean_draws.push(rep.mean_gradient.clone());
        for k in 0..d {
            let mut v = rep.eigenvectors[k].clone();
            let a = anchors[k];
            if v[a].signum() != point.eigenvectors[k][a].signum() {
                for c in &mut v {
                    *c = -*c;
                }
            }
            vec_draws[k].push(v);
            val_draws[k].push(rep.eigenvalues[k]);
        }
    }

    let band = |draws: &[f64]| -> (f64, f64) {
        let mut s = draws.to_vec();
        s.sort_unstable_by(f64::total_cmp);
        (sorted_quantile(&s, alpha / 2.0), sorted_quantile(&s, 1.0 - alpha / 2.0))
    };
    let mean_gradient_bands: Vec<(f64, f64)> = (0..d)
        .map(|j| band(&mean_draws.iter().map(|m| m[j]).collect::<Vec<_>>()))
        .collect();
    let eigenvector_bands: Vec<Vec<(f64, f64)>> = (0..d)
        .map(|k| {
            (0..d)
                .map(|j| band(&vec_draws[k].iter().map(|v| v[j]).collect::<Vec<_>>()))
                .collect()
        })
        .collect();
    let eigenvalue_bands: Vec<(f64, f64)> = (0..d).map(|k| band(&val_draws[k])).collect();

    point.bootstrap = Some(SubspaceBootstrap {
        cycles,
        alpha,
        mean_gradient_draws: mean_draws,
        mean_gradient_bands,
        eigenvector_draws: vec_draws,
        eigenvector_bands,
        eigenvalue_bands,
    });
    Ok(point)
}
