//! The five classifier-based test statistics: supervised LRT and score
//! (built on the signal/background density ratio), and the semi-supervised
//! LRT, AUC and MCE (built on the experimental-vs-background classifier).
//!
//! Classifier probabilities are clamped to `[EPS, 1−EPS]` before any
//! ratio or logit so every statistic stays finite; the clamp replaces the
//! noise-injection trick sometimes used for the same purpose, keeping
//! results reproducible.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probability clamp applied before logits and density ratios.
pub const PROB_CLAMP_EPS: f64 = 1e-10;

/// Number of grid points for the mixture-proportion MLE on [0, 1].
pub const LAMBDA_GRID_POINTS: usize = 1001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioKind {
    SignalOverBackground,
    ExperimentalOverBackground,
}

/// Density-ratio estimates ψ̂ (signal/background) or ψ̂† (experimental/
/// background), obtained by inverting classifier posteriors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityRatio {
    pub values: Vec<f64>,
    pub kind: RatioKind,
    /// Class-1 prior used in the inversion (π₀ or π).
    pub prior: f64,
}

/// Which of the five statistics a value belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Statistic {
    MdLrt,
    MdScore,
    MiLrt,
    MiAuc,
    MiMce,
}

impl Statistic {
    pub fn as_str(&self) -> &'static str {
        match self {
            Statistic::MdLrt => "md-lrt",
            Statistic::MdScore => "md-score",
            Statistic::MiLrt => "mi-lrt",
            Statistic::MiAuc => "mi-auc",
            Statistic::MiMce => "mi-mce",
        }
    }

    pub fn is_model_independent(&self) -> bool {
        matches!(self, Statistic::MiLrt | Statistic::MiAuc | Statistic::MiMce)
    }

    /// Which tail of the null distribution is evidence against the null.
    pub fn tail(&self) -> Tail {
        match self {
            Statistic::MiMce => Tail::Lower,
            _ => Tail::Upper,
        }
    }
}

impl std::str::FromStr for Statistic {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "md-lrt" => Ok(Statistic::MdLrt),
            "md-score" => Ok(Statistic::MdScore),
            "mi-lrt" => Ok(Statistic::MiLrt),
            "mi-auc" => Ok(Statistic::MiAuc),
            "mi-mce" => Ok(Statistic::MiMce),
            other => Err(Error::Config(format!("unknown statistic '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tail {
    Upper,
    Lower,
}

/// A computed statistic with its metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatValue {
    pub statistic: Statistic,
    pub value: f64,
    /// Grid MLE of the mixture proportion; supervised LRT only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_hat_mle: Option<f64>,
    pub tail: Tail,
    /// For the semi-supervised LRT, the unscaled statistic T = 2·n·value.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lrt_total: Option<f64>,
}

impl StatValue {
    fn plain(statistic: Statistic, value: f64) -> Self {
        Self { statistic, value, lambda_hat_mle: None, tail: statistic.tail(), lrt_total: None }
    }
}

#[inline]
pub(crate) fn clamp_prob(h: f64) -> f64 {
    h.clamp(PROB_CLAMP_EPS, 1.0 - PROB_CLAMP_EPS)
}

#[inline]
pub(crate) fn logit(h: f64) -> f64 {
    let h = clamp_prob(h);
    (h / (1.0 - h)).ln()
}

/// Invert classifier posteriors into density-ratio estimates:
/// ((1−prior)/prior) · h/(1−h) with h clamped.
pub fn density_ratio(h_values: &[f64], prior: f64, kind: RatioKind) -> Result<DensityRatio> {
    if !(prior > 0.0 && prior < 1.0) {
        return Err(Error::Domain(format!("prior {prior} outside (0,1)")));
    }
    let scale = (1.0 - prior) / prior;
    let values = h_values
        .iter()
        .map(|&h| {
            let h = clamp_prob(h);
            scale * h / (1.0 - h)
        })
        .collect();
    Ok(DensityRatio { values, kind, prior })
}

/// Mixture log-likelihood Σ log(1−λ+λψᵢ) at a given λ.
fn mixture_loglik(psi: &[f64], lambda: f64) -> f64 {
    psi.iter().map(|&p| (1.0 - lambda + lambda * p).ln()).sum()
}

/// Grid MLE of λ on [0,1]: argmax over `LAMBDA_GRID_POINTS` equispaced
/// points, ties broken toward smaller λ. The log-likelihood is concave in
/// λ, so a ternary search over grid indices finds the argmax; a final
/// local scan guards the plateau edges.
pub(crate) fn lambda_grid_mle(psi: &[f64]) -> (f64, f64) {
    let last = LAMBDA_GRID_POINTS - 1;
    let at = |i: usize| mixture_loglik(psi, i as f64 / last as f64);
    let (mut lo, mut hi) = (0usize, last);
    while hi - lo > 2 {
        let third = (hi - lo) / 3;
        let m1 = lo + third;
        let m2 = hi - third;
        if at(m1) < at(m2) {
            lo = m1 + 1;
        } else {
            hi = m2;
        }
    }
    // Scan a small window around the bracket; ties resolve to the smaller index.
    let scan_lo = lo.saturating_sub(2);
    let scan_hi = (hi + 2).min(last);
    let mut best_i = scan_lo;
    let mut best_v = at(scan_lo);
    for i in scan_lo + 1..=scan_hi {
        let v = at(i);
        if v > best_v {
            best_v = v;
            best_i = i;
        }
    }
    // λ = 0 always attains log-likelihood 0; never report worse.
    if best_v < 0.0 {
        return (0.0, 0.0);
    }
    (best_i as f64 / last as f64, best_v)
}

/// Supervised likelihood ratio statistic T = 2 Σ log(1−λ̂+λ̂ψ̂(Wᵢ)) with λ̂
/// the grid MLE.
pub fn md_lrt(psi: &DensityRatio) -> Result<StatValue> {
    if psi.kind != RatioKind::SignalOverBackground {
        return Err(Error::Config("md-lrt needs a signal/background density ratio".into()));
    }
    if psi.values.is_empty() {
        return Err(Error::Data("empty density ratio".into()));
    }
    let (lambda_hat, loglik) = lambda_grid_mle(&psi.values);
    let mut v = StatValue::plain(Statistic::MdLrt, 2.0 * loglik);
    v.lambda_hat_mle = Some(lambda_hat);
    Ok(v)
}

/// Supervised score statistic: mean(ψ̂(Wᵢ) − 1).
pub fn md_score(psi: &DensityRatio) -> Result<StatValue> {
    if psi.kind != RatioKind::SignalOverBackground {
        return Err(Error::Config("md-score needs a signal/background density ratio".into()));
    }
    if psi.values.is_empty() {
        return Err(Error::Data("empty density ratio".into()));
    }
    let mean = psi.values.iter().map(|p| p - 1.0).sum::<f64>() / psi.values.len() as f64;
    Ok(StatValue::plain(Statistic::MdScore, mean))
}

/// Semi-supervised LRT in its per-event form
/// T̃ = log((1−π)/π) + mean log(h/(1−h)); `lrt_total` carries T = 2·n·T̃.
pub fn mi_lrt(h_on_test_w: &[f64], prior: f64) -> Result<StatValue> {
    if h_on_test_w.is_empty() {
        return Err(Error::Data("empty score vector".into()));
    }
    if !(prior > 0.0 && prior < 1.0) {
        return Err(Error::Domain(format!("prior {prior} outside (0,1)")));
    }
    let n = h_on_test_w.len() as f64;
    let mean_logit = h_on_test_w.iter().map(|&h| logit(h)).sum::<f64>() / n;
    let value = ((1.0 - prior) / prior).ln() + mean_logit;
    let mut v = StatValue::plain(Statistic::MiLrt, value);
    v.lrt_total = Some(2.0 * n * value);
    Ok(v)
}

/// Strictly-greater pair counting: Σᵢⱼ 1{w[j] > x[i]}, computed by sorting
/// the background scores and binary-searching each experimental score.
/// Exactly equal to full pair enumeration; ties contribute nothing.
fn count_exceeding_pairs(x: &[f64], w: &[f64]) -> u64 {
    let mut sorted_x = x.to_vec();
    sorted_x.sort_unstable_by(f64::total_cmp);
    w.iter()
        .map(|&wi| sorted_x.partition_point(|&xv| xv < wi) as u64)
        .sum()
}

/// Semi-supervised AUC: fraction of (background, experimental) pairs the
/// classifier ranks in the right order, strict inequality.
pub fn mi_auc(h_on_test_x: &[f64], h_on_test_w: &[f64]) -> Result<StatValue> {
    if h_on_test_x.is_empty() || h_on_test_w.is_empty() {
        return Err(Error::Data("empty score vector".into()));
    }
    let pairs = (h_on_test_x.len() as f64) * (h_on_test_w.len() as f64);
    let value = count_exceeding_pairs(h_on_test_x, h_on_test_w) as f64 / pairs;
    Ok(StatValue::plain(Statistic::MiAuc, value))
}

/// AUC variant granting half credit to tied pairs. Not used by the tests
/// (the strict form is the reference definition); provided for score
/// distributions with heavy ties.
pub fn mi_auc_half_ties(h_on_test_x: &[f64], h_on_test_w: &[f64]) -> Result<StatValue> {
    if h_on_test_x.is_empty() || h_on_test_w.is_empty() {
        return Err(Error::Data("empty score vector".into()));
    }
    let mut sorted_x = h_on_test_x.to_vec();
    sorted_x.sort_unstable_by(f64::total_cmp);
    let mut total = 0.0f64;
    for &wi in h_on_test_w {
        let below = sorted_x.partition_point(|&xv| xv < wi);
        let at_or_below = sorted_x.partition_point(|&xv| xv <= wi);
        total += below as f64 + 0.5 * (at_or_below - below) as f64;
    }
    let pairs = (h_on_test_x.len() as f64) * (h_on_test_w.len() as f64);
    Ok(StatValue::plain(Statistic::MiAuc, total / pairs))
}

/// Semi-supervised misclassification error at the training prior π:
/// ½[mean 1{h(X) > π} + mean 1{h(W) < π}]. Both comparisons are strict, so
/// scores equal to the threshold count as correctly classified on each side.
pub fn mi_mce(h_on_test_x: &[f64], h_on_test_w: &[f64], threshold: f64) -> Result<StatValue> {
    if h_on_test_x.is_empty() || h_on_test_w.is_empty() {
        return Err(Error::Data("empty score vector".into()));
    }
    let fpr = h_on_test_x.iter().filter(|&&h| h > threshold).count() as f64
        / h_on_test_x.len() as f64;
    let fnr = h_on_test_w.iter().filter(|&&h| h < threshold).count() as f64
        / h_on_test_w.len() as f64;
    Ok(StatValue::plain(Statistic::MiMce, 0.5 * (fpr + fnr)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ratio(values: Vec<f64>) -> DensityRatio {
        DensityRatio { values, kind: RatioKind::SignalOverBackground, prior: 0.5 }
    }

    #[test]
    fn density_ratio_balanced_uninformative() {
        let r = density_ratio(&[0.5], 0.5, RatioKind::SignalOverBackground).unwrap();
        assert!((r.values[0] - 1.0).abs() < 1e-12);
    }

    // Arithmetic: ((1 - 1/3)/(1/3)) * (0.5/0.5) = 2.
    #[test]
    fn density_ratio_prior_scaling() {
        let r = density_ratio(&[0.5], 1.0 / 3.0, RatioKind::ExperimentalOverBackground).unwrap();
        assert!((r.values[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn density_ratio_clamps_extremes() {
        let prior = 0.5;
        let r = density_ratio(&[1.0, 0.0], prior, RatioKind::SignalOverBackground).unwrap();
        let expect_hi = (1.0 - PROB_CLAMP_EPS) / PROB_CLAMP_EPS;
        assert!(r.values[0].is_finite());
        // 1 - (1 - eps) cancels, so only ~1e-7 relative agreement is exact here
        assert!((r.values[0] - expect_hi).abs() / expect_hi < 1e-6);
        assert!(r.values[1] > 0.0);
        assert!(density_ratio(&[0.5], 1.0, RatioKind::SignalOverBackground).is_err());
    }

    #[test]
    fn md_lrt_flat_likelihood_breaks_tie_at_zero() {
        let v = md_lrt(&ratio(vec![1.0, 1.0, 1.0])).unwrap();
        assert_eq!(v.lambda_hat_mle, Some(0.0));
        assert_eq!(v.value, 0.0);
    }

    #[test]
    fn md_lrt_all_background_evidence() {
        let v = md_lrt(&ratio(vec![0.0, 0.0, 0.0])).unwrap();
        assert_eq!(v.lambda_hat_mle, Some(0.0));
        assert_eq!(v.value, 0.0);
    }

    fn full_grid_oracle(psi: &[f64]) -> (f64, f64) {
        let last = LAMBDA_GRID_POINTS - 1;
        let mut best = (0usize, f64::NEG_INFINITY);
        for i in 0..=last {
            let l = i as f64 / last as f64;
            let v: f64 = psi.iter().map(|&p| (1.0 - l + l * p).ln()).sum();
            if v > best.1 {
                best = (i, v);
            }
        }
        (best.0 as f64 / last as f64, best.1.max(0.0))
    }

    #[test]
    fn md_lrt_matches_dense_grid_oracle() {
        let psi = vec![3.0, 3.0, 0.5, 0.5];
        let v = md_lrt(&ratio(psi.clone())).unwrap();
        let (l_star, ll_star) = full_grid_oracle(&psi);
        assert!((v.value - 2.0 * ll_star).abs() < 1e-9);
        assert_eq!(v.lambda_hat_mle, Some(l_star));
        assert!(v.value >= 0.0);
    }

    proptest! {
        // Ternary search over the concave grid must agree with the full scan.
        #[test]
        fn ternary_equals_full_scan(psi in proptest::collection::vec(0.0f64..5.0, 1..40)) {
            let (l_fast, ll_fast) = lambda_grid_mle(&psi);
            let (l_full, ll_full) = full_grid_oracle(&psi);
            prop_assert!((ll_fast - ll_full).abs() < 1e-9);
            prop_assert_eq!(l_fast, l_full);
        }

        // AUC of any strictly monotone transform of all scores is unchanged.
        #[test]
        fn auc_monotone_invariance(
            x in proptest::collection::vec(0.0f64..1.0, 1..50),
            w in proptest::collection::vec(0.0f64..1.0, 1..50),
        ) {
            let a = mi_auc(&x, &w).unwrap().value;
            let tx: Vec<f64> = x.iter().map(|v| (3.0 * v).exp()).collect();
            let tw: Vec<f64> = w.iter().map(|v| (3.0 * v).exp()).collect();
            let b = mi_auc(&tx, &tw).unwrap().value;
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn md_score_examples() {
        assert_eq!(md_score(&ratio(vec![1.0, 1.0])).unwrap().value, 0.0);
        assert_eq!(md_score(&ratio(vec![2.0, 0.0])).unwrap().value, 0.0);
        assert!((md_score(&ratio(vec![3.0, 1.0, 2.0])).unwrap().value - 1.0).abs() < 1e-12);
        // constant ratio c gives exactly c - 1
        let c = 2.75;
        assert!((md_score(&ratio(vec![c; 7])).unwrap().value - (c - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn mi_lrt_balanced_constant_scores() {
        let v = mi_lrt(&[0.5, 0.5, 0.5], 0.5).unwrap();
        assert_eq!(v.value, 0.0);
        assert_eq!(v.lrt_total, Some(0.0));
    }

    // Logit arithmetic: log(0.731058/0.268942) ≈ 1.
    #[test]
    fn mi_lrt_single_event_logit() {
        let v = mi_lrt(&[0.7310585786300049], 0.5).unwrap();
        assert!((v.value - 1.0).abs() < 1e-9);
        assert!((v.lrt_total.unwrap() - 2.0).abs() < 1e-8);
    }

    // Prior-matching cancellation: log 3 + log(1/3) = 0.
    #[test]
    fn mi_lrt_prior_matching_scores() {
        let v = mi_lrt(&[0.25; 10], 0.25).unwrap();
        assert!(v.value.abs() < 1e-12);
    }

    #[test]
    fn mi_auc_enumerated_pairs() {
        let v = mi_auc(&[0.1, 0.8], &[0.9, 0.2]).unwrap();
        assert_eq!(v.value, 0.75);
    }

    #[test]
    fn mi_auc_tie_contract() {
        assert_eq!(mi_auc(&[0.4; 5], &[0.4; 3]).unwrap().value, 0.0);
        assert_eq!(mi_auc_half_ties(&[0.4; 5], &[0.4; 3]).unwrap().value, 0.5);
    }

    #[test]
    fn mi_auc_perfect_separation() {
        let v = mi_auc(&[0.1, 0.2], &[0.3, 0.4, 0.5]).unwrap();
        assert_eq!(v.value, 1.0);
    }

    #[test]
    fn mi_mce_hand_count() {
        let v = mi_mce(&[0.6, 0.4], &[0.3, 0.7], 0.5).unwrap();
        assert_eq!(v.value, 0.5);
        assert_eq!(v.tail, Tail::Lower);
    }

    #[test]
    fn mi_mce_perfect_separation() {
        let v = mi_mce(&[0.1, 0.2], &[0.9, 0.8], 0.5).unwrap();
        assert_eq!(v.value, 0.0);
    }

    // Threshold ties are strict on both sides: scores equal to π are neither
    // false positives nor false negatives.
    #[test]
    fn mi_mce_threshold_tie_convention() {
        let v = mi_mce(&[0.5, 0.5], &[0.5, 0.5], 0.5).unwrap();
        assert_eq!(v.value, 0.0);
    }

    #[test]
    fn empty_inputs_error() {
        assert!(mi_auc(&[], &[0.1]).is_err());
        assert!(mi_mce(&[0.1], &[], 0.5).is_err());
        assert!(mi_lrt(&[], 0.5).is_err());
        assert!(md_lrt(&ratio(vec![])).is_err());
    }
}
