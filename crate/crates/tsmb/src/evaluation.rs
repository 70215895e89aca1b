//! Metrics, interval-coverage measurement, and bootstrap delay-distribution
//! diagnostics.

use serde::{Deserialize, Serialize};

use crate::config::{Method, RunConfig};
use crate::dataset::DelayVector;
use crate::ensemble::PredictionDistribution;
use crate::error::{Error, Result};
use crate::optimizer::SearchBox;

/// Histogram bins used for delay-distribution diagnostics.
pub const DEFAULT_HISTOGRAM_BINS: usize = 20;

/// Version tag written into report files.
pub const REPORT_FORMAT_VERSION: u32 = 1;

/// Which headline metric a task uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Auc,
    R2,
}

/// Area under the ROC curve in the Mann-Whitney form: the probability that a
/// random positive outranks a random negative, ties counted one half.
pub fn auc(scores: &[f64], labels: &[f64]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Data(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&v| v != 0.0 && v != 1.0) {
        return Err(Error::Data(format!("labels must be 0 or 1, got {bad}")));
    }
    let n_pos = labels.iter().filter(|&&v| v == 1.0).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Data(
            "AUC needs both classes present in the labels".into(),
        ));
    }

    // Average ranks over tied score groups, then the rank-sum statistic.
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // Ranks are 1-based; tied entries share the mean rank of the group.
        let mean_rank = (i + j + 2) as f64 / 2.0;
        for &idx in &order[i..=j] {
            if labels[idx] == 1.0 {
                rank_sum_pos += mean_rank;
            }
        }
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Coefficient of determination about the mean of `actual`; may be negative.
pub fn r_squared(pred: &[f64], actual: &[f64]) -> Result<f64> {
    if pred.len() != actual.len() {
        return Err(Error::Data(format!(
            "{} predictions for {} actuals",
            pred.len(),
            actual.len()
        )));
    }
    if actual.len() < 2 {
        return Err(Error::Data("R^2 needs at least 2 rows".into()));
    }
    let mean = actual.iter().sum::<f64>() / actual.len() as f64;
    let ss_tot: f64 = actual.iter().map(|y| (y - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::Data("R^2 is undefined for a constant actual".into()));
    }
    let ss_res: f64 = pred
        .iter()
        .zip(actual)
        .map(|(p, y)| (y - p).powi(2))
        .sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Fraction of rows whose actual value falls inside the closed interval.
pub fn coverage(intervals: &[(f64, f64)], actual: &[f64]) -> Result<f64> {
    if intervals.len() != actual.len() {
        return Err(Error::Data(format!(
            "{} intervals for {} actuals",
            intervals.len(),
            actual.len()
        )));
    }
    if intervals.is_empty() {
        return Err(Error::Data("coverage needs at least 1 row".into()));
    }
    for &(lo, hi) in intervals {
        if lo > hi {
            return Err(Error::Data(format!(
                "interval lower bound {lo} exceeds upper bound {hi}"
            )));
        }
    }
    let hits = intervals
        .iter()
        .zip(actual)
        .filter(|(&(lo, hi), &y)| lo <= y && y <= hi)
        .count();
    Ok(hits as f64 / actual.len() as f64)
}

/// Coverage for classification tasks, where only binary outcomes are
/// observed: the fraction of rows whose classic point-estimate prediction
/// falls inside the ensemble's percentile interval.
pub fn coverage_for_classification(
    distribution: &PredictionDistribution,
    point_estimates: &[f64],
) -> Result<f64> {
    if distribution.rows() != point_estimates.len() {
        return Err(Error::Data(format!(
            "{} interval rows for {} point estimates",
            distribution.rows(),
            point_estimates.len()
        )));
    }
    let intervals: Vec<(f64, f64)> = distribution
        .lower()
        .iter()
        .zip(distribution.upper())
        .map(|(&lo, &hi)| (lo, hi))
        .collect();
    coverage(&intervals, point_estimates)
}

/// Per-feature histogram of the bootstrap delay distribution, normalized to
/// [0, 1] over the search range, with optional point-estimate and
/// ground-truth markers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayDistributionSummary {
    pub bins: usize,
    pub feature_names: Vec<String>,
    /// `histograms[i][k]` is the mass of members whose normalized delay for
    /// feature `i` lands in bin `k`; each row sums to 1.
    pub histograms: Vec<Vec<f64>>,
    /// Normalized member window values, same binning.
    pub window_histogram: Vec<f64>,
    pub point_estimate: Option<Vec<f64>>,
    pub truth: Option<Vec<f64>>,
}

/// Summarize member delays into per-feature histograms.
pub fn delay_distribution(
    member_delays: &[DelayVector],
    search: &SearchBox,
    feature_names: &[String],
    point_estimate: Option<&DelayVector>,
    truth: Option<&[usize]>,
) -> Result<DelayDistributionSummary> {
    delay_distribution_binned(
        member_delays,
        search,
        feature_names,
        point_estimate,
        truth,
        DEFAULT_HISTOGRAM_BINS,
    )
}

pub fn delay_distribution_binned(
    member_delays: &[DelayVector],
    search: &SearchBox,
    feature_names: &[String],
    point_estimate: Option<&DelayVector>,
    truth: Option<&[usize]>,
    bins: usize,
) -> Result<DelayDistributionSummary> {
    if member_delays.is_empty() {
        return Err(Error::Data("no members to summarize".into()));
    }
    if bins == 0 {
        return Err(Error::Config("histogram needs at least 1 bin".into()));
    }
    let n = search.n_delays();

    let normalize = |value: usize, (lo, hi): (usize, usize)| -> f64 {
        if hi == lo {
            0.0
        } else {
            (value.saturating_sub(lo)) as f64 / (hi - lo) as f64
        }
    };
    let mut histograms = vec![vec![0.0; bins]; n];
    let mut window_histogram = vec![0.0; bins];
    let mass = 1.0 / member_delays.len() as f64;
    for dv in member_delays {
        for ((hist, &delay), &bounds) in histograms
            .iter_mut()
            .zip(&dv.delays)
            .zip(&search.delay_bounds)
        {
            hist[bin_of(normalize(delay, bounds), bins)] += mass;
        }
        let wz = normalize(dv.window, search.window_bounds);
        window_histogram[bin_of(wz, bins)] += mass;
    }

    let mark = |dv: &DelayVector| -> Vec<f64> {
        (0..n)
            .map(|i| normalize(dv.delays[i], search.delay_bounds[i]))
            .collect()
    };
    Ok(DelayDistributionSummary {
        bins,
        feature_names: feature_names.to_vec(),
        histograms,
        window_histogram,
        point_estimate: point_estimate.map(mark),
        truth: truth.map(|t| {
            (0..n)
                .map(|i| normalize(t[i], search.delay_bounds[i]))
                .collect()
        }),
    })
}

fn bin_of(z: f64, bins: usize) -> usize {
    ((z * bins as f64) as usize).min(bins - 1)
}

/// Measured coverage at one interval level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageEntry {
    pub alpha: f64,
    pub coverage: f64,
}

/// The machine-readable result of one run.
///
/// The report embeds the full resolved configuration, so a run can be
/// reproduced from its report alone. Wall-clock time is logged rather than
/// serialized: reports for identical (config, seed) must be bit-identical
/// across runs and worker counts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub format_version: u32,
    pub method: Method,
    pub metric: MetricKind,
    pub metric_value: f64,
    pub evaluated_rows: usize,
    pub coverage: Vec<CoverageEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_member_metrics: Option<Vec<f64>>,
    pub member_delays: Vec<DelayVector>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delay_summary: Option<DelayDistributionSummary>,
    pub config: RunConfig,
    #[serde(skip)]
    pub runtime_seconds: Option<f64>,
}

impl EvaluationReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;
    use statrs::distribution::{ContinuousCDF, Normal};

    #[test]
    fn auc_perfect_ranking_is_one() {
        let score = auc(&[0.9, 0.8, 0.2, 0.1], &[1.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(score, 1.0);
    }

    #[test]
    fn auc_reversed_ranking_is_zero() {
        let score = auc(&[0.9, 0.8, 0.2, 0.1], &[0.0, 0.0, 1.0, 1.0]).unwrap();
        assert_eq!(score, 0.0);
    }

    #[test]
    fn auc_all_ties_is_one_half() {
        let score = auc(&[0.5, 0.5, 0.5, 0.5], &[1.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(score, 0.5);
    }

    #[test]
    fn auc_requires_both_classes() {
        assert!(auc(&[0.1, 0.2], &[1.0, 1.0]).is_err());
        assert!(auc(&[0.1, 0.2], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn auc_invariant_under_monotone_transforms() {
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let scores: Vec<f64> = (0..500).map(|_| rng.gen::<f64>()).collect();
        let labels: Vec<f64> = scores
            .iter()
            .map(|&s| f64::from(rng.gen::<f64>() < s))
            .collect();
        let base = auc(&scores, &labels).unwrap();
        let squashed: Vec<f64> = scores.iter().map(|s| (5.0 * s).tanh()).collect();
        let transformed = auc(&squashed, &labels).unwrap();
        assert!((base - transformed).abs() < 1e-12);
    }

    #[test]
    fn r_squared_perfect_and_mean_predictor() {
        let actual = vec![1.0, 3.0, 2.0, 5.0];
        assert_eq!(r_squared(&actual, &actual).unwrap(), 1.0);
        let mean = actual.iter().sum::<f64>() / 4.0;
        assert_eq!(r_squared(&[mean; 4], &actual).unwrap(), 0.0);
    }

    #[test]
    fn r_squared_can_be_negative() {
        let actual = vec![1.0, 2.0, 3.0, 4.0];
        let bad = vec![4.0, 3.0, 2.0, 1.0];
        assert!(r_squared(&bad, &actual).unwrap() < 0.0);
    }

    #[test]
    fn r_squared_rejects_constant_actuals() {
        assert!(r_squared(&[1.0, 2.0], &[3.0, 3.0]).is_err());
    }

    #[test]
    fn r_squared_invariant_under_common_shift() {
        let actual = vec![1.0, 4.0, 2.0, 8.0, 5.0];
        let pred = vec![1.5, 3.0, 2.5, 7.0, 5.5];
        let base = r_squared(&pred, &actual).unwrap();
        let c = 113.25;
        let shifted_pred: Vec<f64> = pred.iter().map(|v| v + c).collect();
        let shifted_actual: Vec<f64> = actual.iter().map(|v| v + c).collect();
        let shifted = r_squared(&shifted_pred, &shifted_actual).unwrap();
        assert!((base - shifted).abs() < 1e-9);
    }

    #[test]
    fn coverage_trivial_cases() {
        let actual = vec![0.0, 1.0, 2.0];
        let wide = vec![(-1e300, 1e300); 3];
        assert_eq!(coverage(&wide, &actual).unwrap(), 1.0);
        let wrong = vec![(5.0, 5.0); 3];
        assert_eq!(coverage(&wrong, &actual).unwrap(), 0.0);
    }

    #[test]
    fn coverage_validates_bounds_and_lengths() {
        assert!(coverage(&[(2.0, 1.0)], &[1.5]).is_err());
        assert!(coverage(&[(0.0, 1.0)], &[0.5, 0.6]).is_err());
    }

    #[test]
    fn coverage_matches_analytic_gaussian_quantiles() {
        // Monte-Carlo oracle: intervals built from the exact normal
        // quantiles must cover 1 - alpha of the draws.
        let n = 10_000;
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(123);
        let draws: Vec<f64> = (0..n)
            .map(|_| {
                let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
                let u2: f64 = rng.gen();
                (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
            })
            .collect();
        for alpha in [0.05, 0.2] {
            let lo = normal.inverse_cdf(alpha / 2.0);
            let hi = normal.inverse_cdf(1.0 - alpha / 2.0);
            let intervals = vec![(lo, hi); n];
            let c = coverage(&intervals, &draws).unwrap();
            assert!(
                (c - (1.0 - alpha)).abs() < 0.02,
                "alpha {alpha}: coverage {c}"
            );
        }
    }

    #[test]
    fn coverage_is_monotone_in_interval_width() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let actual: Vec<f64> = (0..500).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect();
        let mut last = 0.0;
        for half_width in [0.1, 0.5, 1.0, 2.0] {
            let intervals: Vec<(f64, f64)> = vec![(-half_width, half_width); actual.len()];
            let c = coverage(&intervals, &actual).unwrap();
            assert!(c >= last);
            last = c;
        }
    }

    #[test]
    fn classification_coverage_counts_contained_baselines() {
        let members = vec![vec![0.2, 0.2], vec![0.4, 0.4], vec![0.6, 0.6], vec![0.8, 0.8]];
        let dist = PredictionDistribution::from_members(members, 0.5).unwrap();
        // First baseline inside the interval, second far outside.
        let c = coverage_for_classification(&dist, &[0.5, 99.0]).unwrap();
        assert_eq!(c, 0.5);
        // A baseline equal to the mean sits inside its own member quantiles.
        let mean = dist.mean().to_vec();
        assert_eq!(coverage_for_classification(&dist, &mean).unwrap(), 1.0);
    }

    #[test]
    fn delay_histograms_sum_to_one() {
        let search = SearchBox::uniform(2, (0, 30), (1, 4)).unwrap();
        let members: Vec<DelayVector> = (0..25)
            .map(|b| DelayVector {
                delays: vec![b % 31, (3 * b) % 31],
                window: 1 + b % 4,
            })
            .collect();
        let summary = delay_distribution(
            &members,
            &search,
            &["a".into(), "b".into()],
            None,
            None,
        )
        .unwrap();
        for hist in &summary.histograms {
            let total: f64 = hist.iter().sum();
            assert!((total - 1.0).abs() < 1e-9);
        }
        let total: f64 = summary.window_histogram.iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn identical_members_occupy_a_single_bin() {
        let search = SearchBox::uniform(1, (0, 30), (1, 1)).unwrap();
        let members = vec![
            DelayVector {
                delays: vec![12],
                window: 1,
            };
            10
        ];
        let summary =
            delay_distribution(&members, &search, &["a".into()], None, None).unwrap();
        let occupied: Vec<usize> = summary.histograms[0]
            .iter()
            .enumerate()
            .filter(|(_, &m)| m > 0.0)
            .map(|(k, _)| k)
            .collect();
        assert_eq!(occupied.len(), 1);
        assert!((summary.histograms[0][occupied[0]] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn truth_marker_lands_in_occupied_support() {
        let search = SearchBox::uniform(1, (0, 15), (1, 1)).unwrap();
        let members = vec![
            DelayVector {
                delays: vec![7],
                window: 1,
            };
            6
        ];
        let summary =
            delay_distribution(&members, &search, &["a".into()], None, Some(&[7])).unwrap();
        let truth = summary.truth.unwrap();
        let bin = bin_of(truth[0], summary.bins);
        assert!(summary.histograms[0][bin] > 0.0);
    }
}
