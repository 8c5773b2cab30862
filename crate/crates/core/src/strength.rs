//! Signal-strength estimation in the semi-supervised mode.
//!
//! The classifier score of each test experimental event is converted to its
//! background rank ρ̂ ∈ [0,1] (the quantile transform). For pure background
//! ρ̂ is uniform, and the density of ρ̂ at 1 equals 1−λ, so λ is recovered
//! from a boundary density estimate: histogram counts on (T, 1] fed into a
//! Poisson regression f(t) = exp(β₀ + β₁ t) with β₁ ≤ 0 (the density is
//! non-increasing), evaluated at t = 1.
//!
//! The regression is on the counts scale, with the n·b exposure folded into
//! the Poisson mean so exp(β₀+β₁t) reads directly as a density.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{bootstrap_split, split, EventTable, SplitParts, SplitSpec};
use crate::error::{Error, Result};
use crate::forest::{fit, Forest, ForestConfig};
use crate::numeric::{kolmogorov_sf, ks_uniform, normal_quantile, sample_sd, sorted_quantile};
use crate::rng::stream_rng;

/// Background-rank transforms ρ̂(Wᵢ) of the test experimental events.
/// Values lie on the lattice {0, 1/m₂, …, 1} by construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RhoSample {
    pub values: Vec<f64>,
    /// Size m₂ of the reference (test background) sample.
    pub reference_size: usize,
}

/// ρ̂(Wᵢ) = (1/m) Σⱼ 1{h(Xⱼ) ≥ h(Wᵢ)}: the fraction of reference scores at
/// or above each experimental score. Sort + binary search; exactly equal to
/// the double loop.
pub fn np_quantile_transform(h_on_test_w: &[f64], h_on_test_x: &[f64]) -> Result<RhoSample> {
    if h_on_test_x.is_empty() {
        return Err(Error::Data("empty reference score vector".into()));
    }
    if h_on_test_w.is_empty() {
        return Err(Error::Data("empty experimental score vector".into()));
    }
    let m = h_on_test_x.len();
    let mut sorted_x = h_on_test_x.to_vec();
    sorted_x.sort_unstable_by(f64::total_cmp);
    let values = h_on_test_w
        .iter()
        .map(|&w| (m - sorted_x.partition_point(|&x| x < w)) as f64 / m as f64)
        .collect();
    Ok(RhoSample { values, reference_size: m })
}

/// Kolmogorov–Smirnov check of ρ̂ against Uniform(0,1); on held-out
/// background this is a self-test of the classifier/transform plumbing.
///
/// Because ρ̂ ranks each experimental score against the *estimated*
/// reference distribution (the m test-background scores), the distance of
/// ρ̂ to Uniform(0,1) is exactly the two-sample KS statistic between the
/// two score samples. The p-value therefore uses the two-sample effective
/// size m·n/(m+n) rather than n alone.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct UniformityCheck {
    pub ks_distance: f64,
    pub p_value: f64,
    pub n: usize,
    pub reference_size: usize,
}

impl UniformityCheck {
    pub fn is_uniform(&self, alpha: f64) -> bool {
        self.p_value > alpha
    }
}

pub fn uniformity_check(rho: &RhoSample) -> UniformityCheck {
    let n = rho.values.len();
    let m = rho.reference_size;
    let (d, _) = ks_uniform(&rho.values);
    let n_eff = (m as f64 * n as f64) / (m as f64 + n as f64);
    let t = d * (n_eff.sqrt() + 0.12 + 0.11 / n_eff.sqrt());
    UniformityCheck { ks_distance: d, p_value: kolmogorov_sf(t), n, reference_size: m }
}

/// Boundary density fit over (T, 1].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryFit {
    pub threshold: f64,
    pub bin_width: f64,
    /// Histogram counts over the bins (T, T+b], …, (1−b, 1].
    pub counts: Vec<u64>,
    pub beta0: f64,
    pub beta1: f64,
    /// Whether the slope constraint β₁ ≤ 0 forced an intercept-only refit.
    pub intercept_only: bool,
    /// Estimated density of ρ̂ at 1.
    pub g_hat_1: f64,
    /// 1 − g_hat_1, not clipped.
    pub lambda_hat: f64,
    /// Inverse observed information of (β₀, β₁) at the optimum.
    pub beta_cov: [[f64; 2]; 2],
    /// Number of ρ̂ values behind the histogram (the Poisson exposure).
    pub sample_size: usize,
}

impl BoundaryFit {
    /// Delta-method confidence interval for λ from the linear predictor at
    /// t = 1, mapped through λ = 1 − exp(η).
    pub fn glm_interval(&self, alpha: f64) -> (f64, f64) {
        let eta = self.beta0 + self.beta1;
        let var = self.beta_cov[0][0] + 2.0 * self.beta_cov[0][1] + self.beta_cov[1][1];
        let half = normal_quantile(1.0 - alpha / 2.0) * var.max(0.0).sqrt();
        (1.0 - (eta + half).exp(), 1.0 - (eta - half).exp())
    }
}

/// Number of bins tiling (T, 1]; errors unless (1−T)/b is a whole number.
fn bin_count(threshold: f64, bin_width: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&threshold) {
        return Err(Error::Config(format!("threshold {threshold} outside [0,1)")));
    }
    if bin_width <= 0.0 || bin_width > 1.0 - threshold {
        return Err(Error::Config(format!("bin width {bin_width} does not fit (T,1]")));
    }
    let k = (1.0 - threshold) / bin_width;
    let rounded = k.round();
    if (k - rounded).abs() > 1e-6 || rounded < 1.0 {
        return Err(Error::Config(format!(
            "bins of width {bin_width} do not tile [{threshold}, 1] exactly"
        )));
    }
    Ok(rounded as usize)
}

/// Histogram + constrained Poisson regression boundary estimate.
pub fn fit_boundary(rho: &RhoSample, threshold: f64, bin_width: f64) -> Result<BoundaryFit> {
    if rho.values.is_empty() {
        return Err(Error::Data("empty rho sample".into()));
    }
    let k_bins = bin_count(threshold, bin_width)?;
    let n = rho.values.len();

    let mut counts = vec![0u64; k_bins];
    for &u in &rho.values {
        // bin k covers (T + (k-1)b, T + kb]; snap values sitting on an edge
        let r = (u - threshold) / bin_width;
        let nearest = r.round();
        let k = if (r - nearest).abs() < 1e-9 { nearest } else { r.ceil() };
        if k >= 1.0 && k <= k_bins as f64 {
            counts[k as usize - 1] += 1;
        }
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::Numerical(format!(
            "no rho values above threshold {threshold}; cannot fit the boundary density"
        )));
    }

    // Bin right endpoints are the regression covariate.
    let ts: Vec<f64> = (1..=k_bins).map(|k| threshold + k as f64 * bin_width).collect();
    let exposure = n as f64 * bin_width;

    let (beta0, beta1, intercept_only) = {
        let (b0, b1) = newton_poisson(&counts, &ts, exposure)?;
        if b1 > 0.0 {
            (intercept_only_mle(total, exposure, k_bins), 0.0, true)
        } else {
            (b0, b1, false)
        }
    };

    let beta_cov = information_inverse(&ts, exposure, beta0, beta1, intercept_only);
    let g_hat_1 = (beta0 + beta1).exp();
    Ok(BoundaryFit {
        threshold,
        bin_width,
        counts,
        beta0,
        beta1,
        intercept_only,
        g_hat_1,
        lambda_hat: 1.0 - g_hat_1,
        beta_cov,
        sample_size: n,
    })
}

/// Closed-form intercept-only MLE: exp(β₀) = mean(H) / (n·b).
fn intercept_only_mle(total: u64, exposure: f64, k_bins: usize) -> f64 {
    (total as f64 / (k_bins as f64 * exposure)).ln()
}

/// Maximize Σₖ [Hₖ(β₀+β₁tₖ) − n·b·exp(β₀+β₁tₖ)] by Newton iteration.
fn newton_poisson(counts: &[u64], ts: &[f64], exposure: f64) -> Result<(f64, f64)> {
    let total: f64 = counts.iter().map(|&c| c as f64).sum();
    let sum_ht: f64 = counts.iter().zip(ts).map(|(&c, &t)| c as f64 * t).sum();
    let mut b0 = intercept_only_mle(total as u64, exposure, ts.len());
    let mut b1 = 0.0f64;
    for _ in 0..100 {
        let mut se = 0.0;
        let mut ste = 0.0;
        let mut st2e = 0.0;
        for &t in ts {
            let e = (b0 + b1 * t).exp();
            se += e;
            ste += t * e;
            st2e += t * t * e;
        }
        let g0 = total - exposure * se;
        let g1 = sum_ht - exposure * ste;
        let det = se * st2e - ste * ste;
        if det.abs() < 1e-300 || !det.is_finite() {
            return Err(Error::Numerical("singular Hessian in Poisson fit".into()));
        }
        let d0 = (st2e * g0 - ste * g1) / (exposure * det);
        let d1 = (-ste * g0 + se * g1) / (exposure * det);
        // Dampen huge steps to keep the exponentials finite.
        let scale = d0.abs().max(d1.abs());
        let damp = if scale > 10.0 { 10.0 / scale } else { 1.0 };
        b0 += damp * d0;
        b1 += damp * d1;
        if !b0.is_finite() || !b1.is_finite() {
            return Err(Error::Numerical("Poisson fit diverged".into()));
        }
        if (damp * d0).abs().max((damp * d1).abs()) < 1e-8 {
            return Ok((b0, b1));
        }
    }
    Err(Error::Numerical("Poisson fit did not converge in 100 iterations".into()))
}

/// Inverse observed information at the optimum (intercept-only collapses to
/// a single parameter).
fn information_inverse(
    ts: &[f64],
    exposure: f64,
    beta0: f64,
    beta1: f64,
    intercept_only: bool,
) -> [[f64; 2]; 2] {
    let mut se = 0.0;
    let mut ste = 0.0;
    let mut st2e = 0.0;
    for &t in ts {
        let e = (beta0 + beta1 * t).exp();
        se += e;
        ste += t * e;
        st2e += t * t * e;
    }
    if intercept_only {
        let var = 1.0 / (exposure * se);
        return [[var, 0.0], [0.0, 0.0]];
    }
    let det = exposure * exposure * (se * st2e - ste * ste);
    [
        [exposure * st2e / det, -exposure * ste / det],
        [-exposure * ste / det, exposure * se / det],
    ]
}

/// Interval flavors reported with a strength estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalKind {
    Basic,
    Percentile,
    NormalSe,
    Glm,
}

impl IntervalKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            IntervalKind::Basic => "basic",
            IntervalKind::Percentile => "percentile",
            IntervalKind::NormalSe => "normal_se",
            IntervalKind::Glm => "glm",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StrengthSettings {
    pub threshold: f64,
    pub bin_width: f64,
    pub split: SplitSpec,
    pub forest_seed: u64,
}

/// λ̂ with diagnostics: the boundary fit, interval set, and any bootstrap
/// replicates behind them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StrengthEstimate {
    /// Point estimate clipped to [0,1] for reporting.
    pub lambda_hat: f64,
    /// Raw (unclipped) estimate 1 − ĝ(1).
    pub lambda_hat_raw: f64,
    pub intervals: BTreeMap<IntervalKind, (f64, f64)>,
    pub bootstrap_draws: Vec<f64>,
    pub fit: BoundaryFit,
    pub settings: StrengthSettings,
}

impl StrengthEstimate {
    pub fn to_json(&self) -> serde_json::Value {
        let intervals: serde_json::Map<String, serde_json::Value> = self
            .intervals
            .iter()
            .map(|(k, (lo, hi))| (k.as_str().to_string(), serde_json::json!([lo, hi])))
            .collect();
        serde_json::json!({
            "lambda_hat": self.lambda_hat,
            "lambda_hat_raw": self.lambda_hat_raw,
            "intervals": intervals,
            "bootstrap_draws": self.bootstrap_draws,
            "histogram": {
                "threshold": self.fit.threshold,
                "bin_width": self.fit.bin_width,
                "counts": self.fit.counts,
            },
            "glm": {
                "beta0": self.fit.beta0,
                "beta1": self.fit.beta1,
                "intercept_only": self.fit.intercept_only,
                "g_hat_1": self.fit.g_hat_1,
            },
            "settings": {
                "threshold": self.settings.threshold,
                "bin_width": self.settings.bin_width,
                "seed": self.settings.split.seed,
                "sizes": [
                    self.settings.split.train_background,
                    self.settings.split.test_background,
                    self.settings.split.train_experimental,
                    self.settings.split.test_experimental,
                ],
            },
        })
    }
}

fn estimate_from_parts(
    parts: &SplitParts,
    cfg: &ForestConfig,
    threshold: f64,
    bin_width: f64,
) -> Result<(BoundaryFit, Forest)> {
    let forest = fit(&parts.train_background, &parts.train_experimental, cfg)?;
    let hx = forest.predict_proba(&parts.test_background)?;
    let hw = forest.predict_proba(&parts.test_experimental)?;
    let rho = np_quantile_transform(&hw, &hx)?;
    Ok((fit_boundary(&rho, threshold, bin_width)?, forest))
}

fn estimate_once(
    x: &EventTable,
    w: &EventTable,
    cfg: &ForestConfig,
    split_spec: &SplitSpec,
    threshold: f64,
    bin_width: f64,
) -> Result<(BoundaryFit, Forest)> {
    let parts = split(x, w, split_spec)?;
    estimate_from_parts(&parts, cfg, threshold, bin_width)
}

/// Out-of-sample point estimate of λ with a 95% GLM interval:
/// split → train → transform → boundary fit.
pub fn estimate_lambda(
    x: &EventTable,
    w: &EventTable,
    cfg: &ForestConfig,
    split_spec: &SplitSpec,
    threshold: f64,
    bin_width: f64,
) -> Result<StrengthEstimate> {
    estimate_lambda_at(x, w, cfg, split_spec, threshold, bin_width, 0.05)
}

/// As [`estimate_lambda`] with an explicit GLM interval level.
pub fn estimate_lambda_at(
    x: &EventTable,
    w: &EventTable,
    cfg: &ForestConfig,
    split_spec: &SplitSpec,
    threshold: f64,
    bin_width: f64,
    alpha: f64,
) -> Result<StrengthEstimate> {
    let (fit, _) = estimate_once(x, w, cfg, split_spec, threshold, bin_width)?;
    let mut intervals = BTreeMap::new();
    intervals.insert(IntervalKind::Glm, fit.glm_interval(alpha));
    Ok(StrengthEstimate {
        lambda_hat: fit.lambda_hat.clamp(0.0, 1.0),
        lambda_hat_raw: fit.lambda_hat,
        intervals,
        bootstrap_draws: Vec::new(),
        fit,
        settings: StrengthSettings {
            threshold,
            bin_width,
            split: *split_spec,
            forest_seed: cfg.seed,
        },
    })
}

/// Bootstrap uncertainty for λ̂: B redraws of the full pipeline (resample
/// both samples with replacement, split into disjoint train/test halves,
/// re-train, re-estimate), yielding basic (reverse percentile), percentile
/// and normal-SE intervals on top of the point fit's GLM interval.
#[allow(clippy::too_many_arguments)]
pub fn bootstrap_lambda(
    x: &EventTable,
    w: &EventTable,
    cfg: &ForestConfig,
    split_spec: &SplitSpec,
    threshold: f64,
    bin_width: f64,
    cycles: usize,
    alpha: f64,
    seed: u64,
) -> Result<StrengthEstimate> {
    if cycles < 2 {
        return Err(Error::Config("bootstrap needs at least 2 cycles".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("alpha {alpha} outside (0,1)")));
    }
    if (cycles as f64 * alpha / 2.0) < 1.0 {
        return Err(Error::Config(format!(
            "{cycles} cycles cannot resolve the {:.3} quantile; increase cycles",
            alpha / 2.0
        )));
    }
    let mut estimate = estimate_lambda_at(x, w, cfg, split_spec, threshold, bin_width, alpha)?;

    let draws: Vec<f64> = (0..cycles)
        .into_par_iter()
        .map(|b| -> Result<f64> {
            let mut rng = stream_rng(seed, "strength-bootstrap", b as u64);
            let parts = bootstrap_split(x, w, split_spec, &mut rng)?;
            let sub_cfg = ForestConfig { seed: rng.random(), ..cfg.clone() };
            let (fit, _) = estimate_from_parts(&parts, &sub_cfg, threshold, bin_width)?;
            Ok(fit.lambda_hat)
        })
        .collect::<Result<_>>()?;

    let mut sorted = draws.clone();
    sorted.sort_unstable_by(f64::total_cmp);
    let q_lo = sorted_quantile(&sorted, alpha / 2.0);
    let q_hi = sorted_quantile(&sorted, 1.0 - alpha / 2.0);
    let point = estimate.lambda_hat_raw;
    let z = normal_quantile(1.0 - alpha / 2.0);
    let sd = sample_sd(&draws);
    estimate.intervals.insert(IntervalKind::Basic, (2.0 * point - q_hi, 2.0 * point - q_lo));
    estimate.intervals.insert(IntervalKind::Percentile, (q_lo, q_hi));
    estimate.intervals.insert(IntervalKind::NormalSe, (point - z * sd, point + z * sd));
    estimate.bootstrap_draws = draws;
    Ok(estimate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand::Rng;

    #[test]
    fn rho_counts_references_at_or_above() {
        let rho = np_quantile_transform(&[0.5], &[0.2, 0.4, 0.6]).unwrap();
        assert!((rho.values[0] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rho_extremes() {
        let rho = np_quantile_transform(&[0.9, 0.05], &[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(rho.values[0], 0.0); // above every reference score
        assert_eq!(rho.values[1], 1.0); // below every reference score
    }

    #[test]
    fn rho_matches_double_loop() {
        let mut rng = stream_rng(1, "test", 0);
        for _ in 0..50 {
            let m = rng.random_range(1..40);
            let n = rng.random_range(1..40);
            let xs: Vec<f64> =
                (0..m).map(|_| (rng.random_range(0..20u32) as f64) / 20.0).collect();
            let ws: Vec<f64> =
                (0..n).map(|_| (rng.random_range(0..20u32) as f64) / 20.0).collect();
            let fast = np_quantile_transform(&ws, &xs).unwrap();
            for (i, &w) in ws.iter().enumerate() {
                let slow = xs.iter().filter(|&&x| x >= w).count() as f64 / m as f64;
                assert_eq!(fast.values[i], slow);
            }
        }
    }

    // ρ̂ only depends on score ranks, not score values.
    #[test]
    fn rho_invariant_under_monotone_transform() {
        let xs = [0.1, 0.3, 0.5, 0.7];
        let ws = [0.2, 0.6, 0.9];
        let a = np_quantile_transform(&ws, &xs).unwrap();
        let txs: Vec<f64> = xs.iter().map(|v| v.exp()).collect();
        let tws: Vec<f64> = ws.iter().map(|v| v.exp()).collect();
        let b = np_quantile_transform(&tws, &txs).unwrap();
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn uniformity_check_flags_degenerate() {
        let bad = RhoSample { values: vec![0.3; 100], reference_size: 10 };
        assert!(!uniformity_check(&bad).is_uniform(0.01));
        let grid = RhoSample {
            values: (1..=500).map(|i| (i as f64 - 0.5) / 500.0).collect(),
            reference_size: 500,
        };
        assert!(uniformity_check(&grid).is_uniform(0.01));
    }

    #[test]
    fn bin_tiling_must_be_exact() {
        let rho = RhoSample { values: vec![0.9], reference_size: 10 };
        assert!(matches!(fit_boundary(&rho, 0.8, 0.03), Err(Error::Config(_))));
        assert!(fit_boundary(&rho, 0.8, 0.01).is_ok());
        assert!(fit_boundary(&rho, 0.8, 0.05).is_ok());
    }

    // Closed-form oracle: constant counts give β₁ = 0 and exp(β₀) = c/(n·b).
    #[test]
    fn constant_counts_intercept_only() {
        let n = 1000usize;
        // 10 values in each of 20 bins over (0.8, 1.0]
        let mut values = Vec::new();
        for k in 0..20 {
            for j in 0..10 {
                values.push(0.8 + k as f64 * 0.01 + (j as f64 + 0.5) * 0.001);
            }
        }
        values.extend(vec![0.1; n - values.len()]);
        let rho = RhoSample { values, reference_size: 100 };
        let fit = fit_boundary(&rho, 0.8, 0.01).unwrap();
        assert!(fit.counts.iter().all(|&c| c == 10));
        assert!(fit.beta1.abs() < 1e-6, "beta1 = {}", fit.beta1);
        let expect = (10.0 / (n as f64 * 0.01)).ln();
        assert!((fit.beta0 - expect).abs() < 1e-6);
        assert!((fit.g_hat_1 - 1.0).abs() < 1e-6);
        assert!(fit.lambda_hat.abs() < 1e-6);
        assert!(fit.beta1 <= 0.0);
    }

    // 2-D grid oracle: Newton's optimum must dominate a brute-force grid
    // over the constrained region.
    #[test]
    fn newton_beats_grid_search() {
        let mut rng = stream_rng(7, "grid", 0);
        for trial in 0..20 {
            let k_bins = 20;
            let n = 500usize;
            let mut values = Vec::new();
            for k in 0..k_bins {
                let c = rng.random_range(0..30u32);
                for j in 0..c {
                    values.push(0.8 + k as f64 * 0.01 + (j as f64 + 0.5) * 0.0003);
                }
            }
            if values.is_empty() {
                continue;
            }
            while values.len() < n {
                values.push(0.2);
            }
            let rho = RhoSample { values, reference_size: 100 };
            let fit = match fit_boundary(&rho, 0.8, 0.01) {
                Ok(f) => f,
                Err(_) => continue,
            };
            let exposure = n as f64 * 0.01;
            let ts: Vec<f64> = (1..=k_bins).map(|k| 0.8 + k as f64 * 0.01).collect();
            let loglik = |b0: f64, b1: f64| -> f64 {
                fit.counts
                    .iter()
                    .zip(&ts)
                    .map(|(&h, &t)| h as f64 * (b0 + b1 * t) - exposure * (b0 + b1 * t).exp())
                    .sum()
            };
            let fitted = loglik(fit.beta0, fit.beta1);
            let mut best_grid = f64::NEG_INFINITY;
            for i in 0..=80 {
                let b0 = fit.beta0 - 2.0 + 4.0 * i as f64 / 80.0;
                for j in 0..=80 {
                    let b1 = if fit.intercept_only {
                        -4.0 + 4.0 * j as f64 / 80.0
                    } else {
                        fit.beta1 - 2.0 + 4.0 * j as f64 / 80.0
                    }
                    .min(0.0); // constrained region
                    best_grid = best_grid.max(loglik(b0, b1));
                }
            }
            assert!(
                fitted >= best_grid - 1e-6,
                "trial {trial}: grid {best_grid} beats Newton {fitted}"
            );
            assert!(fit.beta1 <= 0.0);
        }
    }

    #[test]
    fn glm_interval_brackets_point() {
        let mut rng = stream_rng(3, "glm", 0);
        let values: Vec<f64> = (0..800).map(|_| rng.random_range(0.0..1.0)).collect();
        let rho = RhoSample { values, reference_size: 100 };
        let fit = fit_boundary(&rho, 0.8, 0.01).unwrap();
        let (lo, hi) = fit.glm_interval(0.05);
        assert!(lo <= fit.lambda_hat && fit.lambda_hat <= hi);
    }

    #[test]
    fn bootstrap_rejects_insufficient_cycles() {
        let t =
            EventTable::new(vec!["x".into()], vec![(0..50).map(f64::from).collect()], None, None)
                .unwrap();
        let split = SplitSpec::balanced_halves(50, 50, 1);
        let cfg = ForestConfig { n_trees: 5, seed: 0, ..Default::default() };
        let err = bootstrap_lambda(&t, &t, &cfg, &split, 0.8, 0.05, 10, 0.05, 3);
        assert!(matches!(err, Err(Error::Config(_))));
    }
}
