//! Null-distribution estimation and p-values: fast bootstrap/permutation
//! resampling with a fixed classifier, the slow in-sample permutation test
//! that re-trains the classifier every cycle, and conditional asymptotic
//! Normal approximations.
//!
//! All p-values from resampling use the finite-sample rule
//! (1 + #{null at least as extreme}) / (B + 1), which never returns 0.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::EventTable;
use crate::error::{Error, Result};
use crate::forest::{fit, Forest, ForestConfig};
use crate::numeric::{normal_cdf, normal_quantile, normal_sf, sample_variance, sorted_quantile};
use crate::rng::stream_rng;
use crate::teststats::{
    self, density_ratio, lambda_grid_mle, logit, RatioKind, StatValue, Statistic, Tail,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NullMethod {
    Asymptotic,
    Bootstrap,
    Permutation,
    SlowPermutation,
}

impl NullMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            NullMethod::Asymptotic => "asymptotic",
            NullMethod::Bootstrap => "bootstrap",
            NullMethod::Permutation => "permutation",
            NullMethod::SlowPermutation => "slow-permutation",
        }
    }
}

impl std::str::FromStr for NullMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "asymptotic" => Ok(NullMethod::Asymptotic),
            "bootstrap" => Ok(NullMethod::Bootstrap),
            "permutation" => Ok(NullMethod::Permutation),
            "slow-permutation" => Ok(NullMethod::SlowPermutation),
            other => Err(Error::Config(format!("unknown null method '{other}'"))),
        }
    }
}

/// How to estimate the null distribution.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NullSpec {
    pub method: NullMethod,
    /// Resampling cycles B; ignored by the asymptotic method.
    pub cycles: usize,
    pub seed: u64,
    pub alpha: f64,
}

impl NullSpec {
    pub fn new(method: NullMethod, cycles: usize, seed: u64, alpha: f64) -> Result<Self> {
        let spec = Self { method, cycles, seed, alpha };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha {} outside (0,1)", self.alpha)));
        }
        if self.method != NullMethod::Asymptotic && self.cycles == 0 {
            return Err(Error::Config("resampling needs at least one cycle".into()));
        }
        Ok(())
    }
}

/// Sample sizes involved in a test: training/test halves of the background
/// and of the class-1 sample (experimental, or signal in supervised mode).
/// In-sample methods report the full sizes in both slots.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SampleSizes {
    pub train_background: usize,
    pub test_background: usize,
    pub train_experimental: usize,
    pub test_experimental: usize,
}

/// Outcome of one test: observed statistic, estimated null, p-value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestReport {
    pub statistic: StatValue,
    /// Null replicates; empty for asymptotic tests.
    pub null_samples: Vec<f64>,
    pub p_value: f64,
    pub reject: bool,
    pub method: NullSpec,
    pub sizes: SampleSizes,
    /// Normal (mean, sd) of the estimated null, asymptotic method only.
    pub asymptotic_null: Option<(f64, f64)>,
    /// RFC 3339 creation time; `None` when suppressed for byte-identical output.
    pub timestamp: Option<String>,
}

impl TestReport {
    /// Quantiles (1%, 5%, 50%, 95%, 99%) of the estimated null distribution.
    pub fn null_quantiles(&self) -> [f64; 5] {
        const PS: [f64; 5] = [0.01, 0.05, 0.5, 0.95, 0.99];
        if let Some((mu, sd)) = self.asymptotic_null {
            PS.map(|p| mu + sd * normal_quantile(p))
        } else {
            let mut sorted = self.null_samples.clone();
            sorted.sort_unstable_by(f64::total_cmp);
            PS.map(|p| sorted_quantile(&sorted, p))
        }
    }

    /// Report in the stable JSON layout used by the CLI.
    pub fn to_json(&self) -> serde_json::Value {
        let q = self.null_quantiles();
        serde_json::json!({
            "statistic": self.statistic.statistic.as_str(),
            "value": self.statistic.value,
            "method": self.method.method.as_str(),
            "B": if self.method.method == NullMethod::Asymptotic { 0 } else { self.method.cycles },
            "p_value": self.p_value,
            "reject": self.reject,
            "alpha": self.method.alpha,
            "sizes": {
                "train_background": self.sizes.train_background,
                "test_background": self.sizes.test_background,
                "train_experimental": self.sizes.train_experimental,
                "test_experimental": self.sizes.test_experimental,
            },
            "seed": self.method.seed,
            "null_quantiles": q,
            "tail": if self.statistic.tail == Tail::Lower { "lower" } else { "upper" },
            "lambda_hat_mle": self.statistic.lambda_hat_mle,
            "lrt_total": self.statistic.lrt_total,
            "timestamp": self.timestamp,
        })
    }
}

/// Finite-sample resampling p-value: (1 + #extreme) / (B + 1).
fn resampling_p(observed: f64, null: &[f64], tail: Tail) -> f64 {
    let count = match tail {
        Tail::Upper => null.iter().filter(|&&v| v >= observed).count(),
        Tail::Lower => null.iter().filter(|&&v| v <= observed).count(),
    };
    (1.0 + count as f64) / (null.len() as f64 + 1.0)
}

fn report(
    statistic: StatValue,
    null_samples: Vec<f64>,
    p_value: f64,
    spec: &NullSpec,
    sizes: SampleSizes,
    asymptotic_null: Option<(f64, f64)>,
) -> TestReport {
    TestReport {
        reject: p_value <= spec.alpha,
        statistic,
        null_samples,
        p_value,
        method: *spec,
        sizes,
        asymptotic_null,
        timestamp: None,
    }
}

/// Per-cycle recomputation of a semi-supervised statistic from pooled
/// scores. `assign` lists pooled indices: the first m2 play the background
/// role, the rest the experimental role.
struct MiRecompute {
    stat: Statistic,
    scores: Vec<f64>,
    logits: Vec<f64>,
    above: Vec<bool>,
    below: Vec<bool>,
    prior: f64,
    m2: usize,
    n2: usize,
}

impl MiRecompute {
    fn new(stat: Statistic, scores_x: &[f64], scores_w: &[f64], prior: f64) -> Self {
        let scores: Vec<f64> = scores_x.iter().chain(scores_w).copied().collect();
        let logits = match stat {
            Statistic::MiLrt => scores.iter().map(|&h| logit(h)).collect(),
            _ => Vec::new(),
        };
        let (above, below) = match stat {
            Statistic::MiMce => (
                scores.iter().map(|&h| h > prior).collect(),
                scores.iter().map(|&h| h < prior).collect(),
            ),
            _ => (Vec::new(), Vec::new()),
        };
        Self { stat, scores, logits, above, below, prior, m2: scores_x.len(), n2: scores_w.len() }
    }

    fn eval(&self, assign: &[u32]) -> f64 {
        let (x_part, w_part) = assign.split_at(self.m2);
        match self.stat {
            Statistic::MiLrt => {
                let mean = w_part.iter().map(|&i| self.logits[i as usize]).sum::<f64>()
                    / self.n2 as f64;
                ((1.0 - self.prior) / self.prior).ln() + mean
            }
            Statistic::MiAuc => {
                let mut xs: Vec<f64> = x_part.iter().map(|&i| self.scores[i as usize]).collect();
                xs.sort_unstable_by(f64::total_cmp);
                let pairs: u64 = w_part
                    .iter()
                    .map(|&i| {
                        let w = self.scores[i as usize];
                        xs.partition_point(|&x| x < w) as u64
                    })
                    .sum();
                pairs as f64 / (self.m2 as f64 * self.n2 as f64)
            }
            Statistic::MiMce => {
                let fpr = x_part.iter().filter(|&&i| self.above[i as usize]).count() as f64
                    / self.m2 as f64;
                let fnr = w_part.iter().filter(|&&i| self.below[i as usize]).count() as f64
                    / self.n2 as f64;
                0.5 * (fpr + fnr)
            }
            _ => unreachable!("model-dependent statistic in MI recompute"),
        }
    }
}

fn observed_mi(stat: Statistic, hx: &[f64], hw: &[f64], prior: f64) -> Result<StatValue> {
    match stat {
        Statistic::MiLrt => teststats::mi_lrt(hw, prior),
        Statistic::MiAuc => teststats::mi_auc(hx, hw),
        Statistic::MiMce => teststats::mi_mce(hx, hw, prior),
        other => Err(Error::Config(format!(
            "{} is a supervised statistic; use resample_null_supervised",
            other.as_str()
        ))),
    }
}

/// Bootstrap/permutation null for a semi-supervised statistic with the
/// classifier held fixed: each cycle redraws the pooled test scores
/// (with replacement for bootstrap, a label shuffle for permutation) and
/// relabels m2 of them background and n2 experimental.
pub fn resample_null(
    stat: Statistic,
    test_x: &EventTable,
    test_w: &EventTable,
    forest: &Forest,
    spec: &NullSpec,
) -> Result<TestReport> {
    spec.validate()?;
    if !matches!(spec.method, NullMethod::Bootstrap | NullMethod::Permutation) {
        return Err(Error::Config(format!(
            "resample_null handles bootstrap/permutation, not {}",
            spec.method.as_str()
        )));
    }
    let hx = forest.predict_proba(test_x)?;
    let hw = forest.predict_proba(test_w)?;
    let prior = forest.prior();
    let observed = observed_mi(stat, &hx, &hw, prior)?;

    let recompute = MiRecompute::new(stat, &hx, &hw, prior);
    let total = hx.len() + hw.len();
    let with_replacement = spec.method == NullMethod::Bootstrap;
    let null_samples: Vec<f64> = (0..spec.cycles)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(spec.seed, "resample-cycle", b as u64);
            let assign: Vec<u32> = if with_replacement {
                (0..total).map(|_| rng.random_range(0..total) as u32).collect()
            } else {
                let mut idx: Vec<u32> = (0..total as u32).collect();
                idx.shuffle(&mut rng);
                idx
            };
            recompute.eval(&assign)
        })
        .collect();

    let p = resampling_p(observed.value, &null_samples, observed.tail);
    let (m1, n1) = forest.class_counts();
    let sizes = SampleSizes {
        train_background: m1,
        test_background: hx.len(),
        train_experimental: n1,
        test_experimental: hw.len(),
    };
    Ok(report(observed, null_samples, p, spec, sizes, None))
}

/// Bootstrap/permutation null for the supervised statistics: the classifier
/// (trained on background vs. the signal model) is fixed, and each cycle
/// redraws n events from the pooled held-out background and experimental
/// sample to play the experimental role.
pub fn resample_null_supervised(
    stat: Statistic,
    test_x: &EventTable,
    w: &EventTable,
    forest: &Forest,
    spec: &NullSpec,
) -> Result<TestReport> {
    spec.validate()?;
    if !matches!(spec.method, NullMethod::Bootstrap | NullMethod::Permutation) {
        return Err(Error::Config(format!(
            "resample_null_supervised handles bootstrap/permutation, not {}",
            spec.method.as_str()
        )));
    }
    if !matches!(stat, Statistic::MdLrt | Statistic::MdScore) {
        return Err(Error::Config(format!(
            "{} is a semi-supervised statistic; use resample_null",
            stat.as_str()
        )));
    }
    let prior = forest.prior();
    let psi_x = density_ratio(&forest.predict_proba(test_x)?, prior, RatioKind::SignalOverBackground)?;
    let psi_w = density_ratio(&forest.predict_proba(w)?, prior, RatioKind::SignalOverBackground)?;
    let observed = match stat {
        Statistic::MdLrt => teststats::md_lrt(&psi_w)?,
        _ => teststats::md_score(&psi_w)?,
    };

    let pool: Vec<f64> = psi_x.values.iter().chain(&psi_w.values).copied().collect();
    let n = psi_w.values.len();
    let with_replacement = spec.method == NullMethod::Bootstrap;
    let null_samples: Vec<f64> = (0..spec.cycles)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(spec.seed, "resample-supervised-cycle", b as u64);
            let drawn: Vec<f64> = if with_replacement {
                (0..n).map(|_| pool[rng.random_range(0..pool.len())]).collect()
            } else {
                // partial Fisher-Yates: a uniformly random n-subset, in random order
                let mut idx: Vec<u32> = (0..pool.len() as u32).collect();
                for i in 0..n {
                    let j = rng.random_range(i..idx.len());
                    idx.swap(i, j);
                }
                idx[..n].iter().map(|&i| pool[i as usize]).collect()
            };
            match stat {
                Statistic::MdLrt => 2.0 * lambda_grid_mle(&drawn).1,
                _ => drawn.iter().map(|p| p - 1.0).sum::<f64>() / n as f64,
            }
        })
        .collect();

    let p = resampling_p(observed.value, &null_samples, observed.tail);
    let (m1, ms) = forest.class_counts();
    let sizes = SampleSizes {
        train_background: m1,
        test_background: test_x.n_rows(),
        train_experimental: ms,
        test_experimental: n,
    };
    Ok(report(observed, null_samples, p, spec, sizes, None))
}

/// Guard for the slow permutation test's retraining cost.
#[derive(Debug, Clone, Copy)]
pub struct SlowPermOptions {
    /// Refuse when (B+1) · n_trees exceeds this, unless `force` is set.
    pub budget_trees: u64,
    pub force: bool,
}

impl Default for SlowPermOptions {
    fn default() -> Self {
        Self { budget_trees: 250_000, force: false }
    }
}

/// Reduced forest used by the slow permutation test by default, keeping
/// B re-trainings tractable. Override by passing any other config.
pub fn slow_perm_forest_default(seed: u64) -> ForestConfig {
    ForestConfig { n_trees: 50, seed, ..Default::default() }
}

/// In-sample permutation test: the observed statistic uses a classifier
/// trained on all of X ∪ W; every cycle permutes the background/
/// experimental labels over the pooled rows, re-trains, and recomputes the
/// statistic in-sample.
pub fn slow_permutation(
    stat: Statistic,
    x: &EventTable,
    w: &EventTable,
    cfg: &ForestConfig,
    spec: &NullSpec,
    opts: &SlowPermOptions,
) -> Result<TestReport> {
    let reports = slow_permutation_multi(&[stat], x, w, cfg, spec, opts)?;
    Ok(reports.into_iter().next().expect("one statistic"))
}

/// Slow permutation for several statistics at once, sharing every
/// re-trained classifier across them.
pub fn slow_permutation_multi(
    stats: &[Statistic],
    x: &EventTable,
    w: &EventTable,
    cfg: &ForestConfig,
    spec: &NullSpec,
    opts: &SlowPermOptions,
) -> Result<Vec<TestReport>> {
    spec.validate()?;
    if spec.method != NullMethod::SlowPermutation {
        return Err(Error::Config("slow_permutation requires method slow-permutation".into()));
    }
    for s in stats {
        if !s.is_model_independent() {
            return Err(Error::Config(format!(
                "{} is a supervised statistic; slow permutation is semi-supervised only",
                s.as_str()
            )));
        }
    }
    let projected = (spec.cycles as u64 + 1) * cfg.n_trees as u64;
    if projected > opts.budget_trees && !opts.force {
        return Err(Error::Config(format!(
            "slow permutation would train {projected} trees, over the budget of {}; \
             lower n_trees/cycles or force past the guard",
            opts.budget_trees
        )));
    }

    let m = x.n_rows();
    let n = w.n_rows();
    let in_sample = |class0: &EventTable, class1: &EventTable, seed: u64| -> Result<Vec<f64>> {
        let forest = fit(class0, class1, &ForestConfig { seed, ..cfg.clone() })?;
        let hx = forest.predict_proba(class0)?;
        let hw = forest.predict_proba(class1)?;
        let prior = forest.prior();
        stats
            .iter()
            .map(|&s| observed_mi(s, &hx, &hw, prior).map(|v| v.value))
            .collect()
    };

    let observed: Vec<StatValue> = {
        let forest = fit(x, w, cfg)?;
        let hx = forest.predict_proba(x)?;
        let hw = forest.predict_proba(w)?;
        let prior = forest.prior();
        stats
            .iter()
            .map(|&s| observed_mi(s, &hx, &hw, prior))
            .collect::<Result<_>>()?
    };

    let pooled = x.concat(w)?;
    let cycle_values: Vec<Vec<f64>> = (0..spec.cycles)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(spec.seed, "slow-perm-cycle", b as u64);
            let mut idx: Vec<usize> = (0..m + n).collect();
            idx.shuffle(&mut rng);
            let class0 = pooled.take_rows(&idx[..m])?;
            let class1 = pooled.take_rows(&idx[m..])?;
            in_sample(&class0, &class1, stream_rng(spec.seed, "slow-perm-forest", b as u64).random())
        })
        .collect::<Result<_>>()?;

    let sizes = SampleSizes {
        train_background: m,
        test_background: m,
        train_experimental: n,
        test_experimental: n,
    };
    Ok(observed
        .into_iter()
        .enumerate()
        .map(|(k, obs)| {
            let null: Vec<f64> = cycle_values.iter().map(|vals| vals[k]).collect();
            let p = resampling_p(obs.value, &null, obs.tail);
            report(obs, null, p, spec, sizes, None)
        })
        .collect())
}

/// Conditional asymptotic Normal null for the semi-supervised statistics,
/// with the classifier fixed:
///
/// * LRT: per-event logits on the held-out background give the null mean
///   and variance of the per-event statistic.
/// * AUC: Normal(0.5, (m+n+1)/(12mn)) under exchangeability.
/// * MCE: Normal(0.5, ¼ p̂(1−p̂)(1/m + 1/n)) with p̂ the pooled rate of
///   scores above the threshold.
pub fn asymptotic_null(
    stat: Statistic,
    test_x: &EventTable,
    test_w: &EventTable,
    forest: &Forest,
    spec: &NullSpec,
) -> Result<TestReport> {
    spec.validate()?;
    if spec.method != NullMethod::Asymptotic {
        return Err(Error::Config("asymptotic_null requires method asymptotic".into()));
    }
    let hx = forest.predict_proba(test_x)?;
    let hw = forest.predict_proba(test_w)?;
    let prior = forest.prior();
    let observed = observed_mi(stat, &hx, &hw, prior)?;

    let m2 = hx.len() as f64;
    let n2 = hw.len() as f64;
    let first = hx[0];
    if hx.iter().chain(&hw).all(|&v| v == first) {
        return Err(Error::Inconclusive("all classifier scores identical".into()));
    }

    let (mu, var) = match stat {
        Statistic::MiLrt => {
            let logits: Vec<f64> = hx.iter().map(|&h| logit(h)).collect();
            let mu0 = logits.iter().sum::<f64>() / m2;
            let s2 = sample_variance(&logits);
            if s2 <= 0.0 {
                return Err(Error::Inconclusive("degenerate background logit variance".into()));
            }
            // The null center is itself estimated from the m2 background
            // logits, so its sampling variance adds to the statistic's.
            (((1.0 - prior) / prior).ln() + mu0, s2 * (1.0 / n2 + 1.0 / m2))
        }
        Statistic::MiAuc => (0.5, (m2 + n2 + 1.0) / (12.0 * m2 * n2)),
        Statistic::MiMce => {
            let above = hx.iter().chain(&hw).filter(|&&h| h > prior).count() as f64;
            let p_hat = above / (m2 + n2);
            let var = 0.25 * p_hat * (1.0 - p_hat) * (1.0 / m2 + 1.0 / n2);
            if var <= 0.0 {
                return Err(Error::Inconclusive("degenerate exceedance rate".into()));
            }
            (0.5, var)
        }
        _ => unreachable!("observed_mi rejects supervised statistics"),
    };
    let sd = var.sqrt();
    let z = (observed.value - mu) / sd;
    let p = match observed.tail {
        Tail::Upper => normal_sf(z),
        Tail::Lower => normal_cdf(z),
    }
    .clamp(1e-300, 1.0);

    let (m1, n1) = forest.class_counts();
    let sizes = SampleSizes {
        train_background: m1,
        test_background: hx.len(),
        train_experimental: n1,
        test_experimental: hw.len(),
    };
    Ok(report(observed, Vec::new(), p, spec, sizes, Some((mu, sd))))
}
