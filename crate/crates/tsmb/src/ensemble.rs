//! The bootstrap model ensemble and its variants.
//!
//! Training draws `B` block-bootstrap resamples, re-estimates the delay
//! vector on each with the global optimizer, and fits one base model per
//! estimated delay on the full training data (only delay estimation sees the
//! resample). Prediction aligns the test window per member and averages
//! member outputs; member order never matters. The collected delay vectors
//! are the empirical bootstrap delay distribution.

use rand::distributions::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::Normal;

use crate::bootstrap::{block_bootstrap_sample, derive_seed, score_sample, BlockBootstrapSpec};
use crate::dataset::{align, DelayVector, TimeSeriesDataset};
use crate::error::{Error, Result};
use crate::learners::{fit_aligned, FittedLearner, LearnerSpec};
use crate::optimizer::{direct_maximize, SearchBox};
use crate::scores::{evaluate, ScoreFunction};

/// Version tag written into model artifact files.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Ensemble configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsmbConfig {
    /// Bootstrap sample count.
    pub b: usize,
    pub score: ScoreFunction,
    pub learner: LearnerSpec,
    pub bootstrap: BlockBootstrapSpec,
    pub search: SearchBox,
    pub seed: u64,
}

impl TsmbConfig {
    pub fn validate(&self) -> Result<()> {
        if self.b == 0 {
            return Err(Error::Config("bootstrap sample count must be >= 1".into()));
        }
        self.learner.validate()?;
        self.search.validate()?;
        BlockBootstrapSpec::new(self.bootstrap.block_fraction, self.bootstrap.seed)?;
        Ok(())
    }

    fn validate_against(&self, train: &TimeSeriesDataset) -> Result<()> {
        self.validate()?;
        if self.search.n_delays() != train.n_features() {
            return Err(Error::Config(format!(
                "search box has {} delay dimensions for {} features",
                self.search.n_delays(),
                train.n_features()
            )));
        }
        // The largest in-box point must leave something to fit on.
        let corner = self.search.upper_corner();
        let aligned = align(train, &corner)?;
        if aligned.rows() < 3 {
            return Err(Error::Config(format!(
                "search box corner {corner:?} leaves only {} aligned rows",
                aligned.rows()
            )));
        }
        Ok(())
    }

    /// Per-member learner spec: member randomness derives from
    /// `(global seed, member index)` so growing `B` never reshuffles earlier
    /// members.
    fn member_learner(&self, member: usize) -> LearnerSpec {
        LearnerSpec {
            seed: derive_seed(self.seed, member as u64),
            ..self.learner
        }
    }
}

/// One (estimated delay, fitted model) pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TsmbMember {
    pub delays: DelayVector,
    pub learner: FittedLearner,
}

/// The fitted ensemble: `B` members whose delay vectors form the empirical
/// bootstrap delay distribution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TsmbModel {
    pub config: TsmbConfig,
    pub members: Vec<TsmbMember>,
}

impl TsmbModel {
    pub fn b(&self) -> usize {
        self.members.len()
    }

    pub fn member_delays(&self) -> Vec<DelayVector> {
        self.members.iter().map(|m| m.delays.clone()).collect()
    }

    /// Write the model artifact (versioned JSON).
    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let artifact = ModelArtifact {
            format_version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        };
        let json = serde_json::to_string_pretty(&artifact)
            .map_err(|e| Error::Serialization(e.to_string()))?;
        std::fs::write(path, json)?;
        Ok(())
    }

    /// Load a model artifact; predictions after a round trip are
    /// bit-identical.
    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let json = std::fs::read_to_string(path)?;
        let artifact: ModelArtifact =
            serde_json::from_str(&json).map_err(|e| Error::Serialization(e.to_string()))?;
        if artifact.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Serialization(format!(
                "unsupported model format version {}",
                artifact.format_version
            )));
        }
        Ok(artifact.model)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelArtifact {
    format_version: u32,
    model: TsmbModel,
}

/// Per-row member predictions, their mean (the ensemble point prediction),
/// and nearest-rank percentile interval bounds at level `1 - alpha`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictionDistribution {
    members: Vec<Vec<f64>>,
    mean: Vec<f64>,
    alpha: f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl PredictionDistribution {
    /// Aggregate raw member predictions.
    ///
    /// Per row, members are put in ascending order before summing, so the
    /// mean and bounds are bit-identical under any member permutation and
    /// any degree of concurrency.
    pub fn from_members(members: Vec<Vec<f64>>, alpha: f64) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Config("need at least 1 member prediction".into()));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Config(format!("alpha must be in (0, 1), got {alpha}")));
        }
        let rows = members[0].len();
        if members.iter().any(|m| m.len() != rows) {
            return Err(Error::Data("member prediction lengths differ".into()));
        }
        let b = members.len();
        let mut mean = Vec::with_capacity(rows);
        let mut lower = Vec::with_capacity(rows);
        let mut upper = Vec::with_capacity(rows);
        let mut sorted = vec![0.0; b];
        for j in 0..rows {
            for (i, m) in members.iter().enumerate() {
                sorted[i] = m[j];
            }
            sorted.sort_by(f64::total_cmp);
            mean.push(sorted.iter().sum::<f64>() / b as f64);
            lower.push(sorted[nearest_rank_index(alpha / 2.0, b)]);
            upper.push(sorted[nearest_rank_index(1.0 - alpha / 2.0, b)]);
        }
        Ok(Self {
            members,
            mean,
            alpha,
            lower,
            upper,
        })
    }

    pub fn rows(&self) -> usize {
        self.mean.len()
    }

    pub fn b(&self) -> usize {
        self.members.len()
    }

    pub fn members(&self) -> &[Vec<f64>] {
        &self.members
    }

    /// The ensemble point prediction: the arithmetic mean over members.
    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Per-row `(alpha/2, 1 - alpha/2)` interval at a different level,
    /// recomputed from the stored members.
    pub fn interval_at(&self, alpha: f64) -> Result<Vec<(f64, f64)>> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Config(format!("alpha must be in (0, 1), got {alpha}")));
        }
        let b = self.b();
        let lo_idx = nearest_rank_index(alpha / 2.0, b);
        let hi_idx = nearest_rank_index(1.0 - alpha / 2.0, b);
        let mut sorted = vec![0.0; b];
        Ok((0..self.rows())
            .map(|j| {
                for (i, m) in self.members.iter().enumerate() {
                    sorted[i] = m[j];
                }
                sorted.sort_by(f64::total_cmp);
                (sorted[lo_idx], sorted[hi_idx])
            })
            .collect())
    }
}

/// Nearest-rank quantile: the smallest index whose rank covers `q`.
fn nearest_rank_index(q: f64, b: usize) -> usize {
    ((q * b as f64).ceil() as usize).clamp(1, b) - 1
}

fn with_member(index: usize, e: Error) -> Error {
    match e {
        Error::Config(s) => Error::Config(format!("member {index}: {s}")),
        Error::Numeric(s) => Error::Numeric(format!("member {index}: {s}")),
        other => Error::Data(format!("member {index}: {other}")),
    }
}

/// Estimate one member's delay vector: draw its bootstrap resample and
/// maximize the score over it.
fn estimate_member_delay(
    train: &TimeSeriesDataset,
    cfg: &TsmbConfig,
    member: usize,
) -> Result<DelayVector> {
    let sample = block_bootstrap_sample(train, &cfg.bootstrap, member)?;
    let result = direct_maximize(|dv| score_sample(&sample, dv, cfg.score), &cfg.search)?;
    Ok(result.best)
}

/// Train the bootstrap ensemble.
///
/// For each member: draw a block-bootstrap resample, estimate the delay
/// vector on it, then fit the base model on the full training data aligned
/// at that estimate. Members run in parallel; results are collected by index
/// so the outcome is independent of completion order.
pub fn tsmb_train(train: &TimeSeriesDataset, cfg: &TsmbConfig) -> Result<TsmbModel> {
    cfg.validate_against(train)?;
    let members: Result<Vec<TsmbMember>> = maybe_parallel(cfg.b, |b| {
        let delays = estimate_member_delay(train, cfg, b).map_err(|e| with_member(b, e))?;
        let aligned = align(train, &delays).map_err(|e| with_member(b, e))?;
        let learner =
            fit_aligned(&cfg.member_learner(b), &aligned).map_err(|e| with_member(b, e))?;
        Ok(TsmbMember { delays, learner })
    });
    Ok(TsmbModel {
        config: cfg.clone(),
        members: members?,
    })
}

fn maybe_parallel<T: Send>(
    count: usize,
    f: impl Fn(usize) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    use rayon::prelude::*;
    (0..count).into_par_iter().map(f).collect()
}

/// Predict with the ensemble on a test window.
///
/// Each member predicts on the test window aligned at its own delays; rows
/// are cut to the shortest member alignment so every row has all `B` member
/// predictions. The mean is the point prediction; the interval is the
/// nearest-rank `(alpha/2, 1 - alpha/2)` percentile pair per row.
pub fn tsmb_predict(
    model: &TsmbModel,
    test: &TimeSeriesDataset,
    alpha: f64,
) -> Result<PredictionDistribution> {
    tsmb_predict_rows(model, test, alpha, None)
}

/// As [`tsmb_predict`], optionally capping the number of predicted rows
/// (used to pin a common evaluation window across methods).
pub fn tsmb_predict_rows(
    model: &TsmbModel,
    test: &TimeSeriesDataset,
    alpha: f64,
    max_rows: Option<usize>,
) -> Result<PredictionDistribution> {
    if model.members.is_empty() {
        return Err(Error::Config("model has no members".into()));
    }
    let aligned: Vec<_> = model
        .members
        .iter()
        .enumerate()
        .map(|(b, member)| align(test, &member.delays).map_err(|e| with_member(b, e)))
        .collect::<Result<_>>()?;
    let mut rows = aligned.iter().map(|a| a.rows()).min().unwrap_or(0);
    if let Some(cap) = max_rows {
        rows = rows.min(cap);
    }
    if rows == 0 {
        return Err(Error::Data("no test rows survive member alignment".into()));
    }

    let member_predictions: Result<Vec<Vec<f64>>> = model
        .members
        .iter()
        .zip(&aligned)
        .enumerate()
        .map(|(b, (member, a))| {
            let columns: Vec<Vec<f64>> =
                a.columns().iter().map(|c| c[..rows].to_vec()).collect();
            member
                .learner
                .predict(&columns)
                .map_err(|e| with_member(b, e))
        })
        .collect();
    PredictionDistribution::from_members(member_predictions?, alpha)
}

/// Classic point-estimate pipeline: one delay estimation on the full
/// training data, one aligned fit.
pub fn tde_point_train(
    train: &TimeSeriesDataset,
    cfg: &TsmbConfig,
) -> Result<(FittedLearner, DelayVector)> {
    cfg.validate_against(train)?;
    let result = direct_maximize(|dv| evaluate(train, dv, cfg.score), &cfg.search)?;
    let aligned = align(train, &result.best)?;
    let learner = fit_aligned(&cfg.learner, &aligned)?;
    Ok((learner, result.best))
}

/// Componentwise mean of delay vectors, rounded half away from zero;
/// the window is averaged the same way.
pub(crate) fn mean_delay_vector(delays: &[DelayVector]) -> DelayVector {
    let b = delays.len() as f64;
    let n = delays[0].delays.len();
    let mean_delays = (0..n)
        .map(|i| {
            let sum: usize = delays.iter().map(|d| d.delays[i]).sum();
            (sum as f64 / b).round() as usize
        })
        .collect();
    let window_sum: usize = delays.iter().map(|d| d.window).sum();
    DelayVector {
        delays: mean_delays,
        window: ((window_sum as f64 / b).round() as usize).max(1),
    }
}

/// Bootstrap the delay distribution as in ensemble training, then fit a
/// single model at the rounded mean delay vector.
pub fn tdb_train(
    train: &TimeSeriesDataset,
    cfg: &TsmbConfig,
) -> Result<(FittedLearner, DelayVector)> {
    cfg.validate_against(train)?;
    let delays: Vec<DelayVector> = maybe_parallel(cfg.b, |b| {
        estimate_member_delay(train, cfg, b).map_err(|e| with_member(b, e))
    })?;
    let mean = mean_delay_vector(&delays);
    let aligned = align(train, &mean)?;
    let learner = fit_aligned(&cfg.learner, &aligned)?;
    Ok((learner, mean))
}

/// Ensemble around a single point estimate: sample `B` delay vectors from a
/// clipped Gaussian centered at the classic point estimate on the
/// search-range-normalized scale, then fit one model per sample.
pub fn perturbed_train(
    train: &TimeSeriesDataset,
    cfg: &TsmbConfig,
    sigma: f64,
) -> Result<TsmbModel> {
    if sigma < 0.0 {
        return Err(Error::Config(format!("sigma must be >= 0, got {sigma}")));
    }
    cfg.validate_against(train)?;
    let result = direct_maximize(|dv| evaluate(train, dv, cfg.score), &cfg.search)?;
    let center = result.best;

    let dims: Vec<(usize, usize)> = cfg
        .search
        .delay_bounds
        .iter()
        .copied()
        .chain([cfg.search.window_bounds])
        .collect();
    let center_coords: Vec<usize> = center
        .delays
        .iter()
        .copied()
        .chain([center.window])
        .collect();

    let normal = Normal::new(0.0, 1.0).map_err(|e| Error::Numeric(e.to_string()))?;
    let sampled: Vec<DelayVector> = (0..cfg.b)
        .map(|b| {
            let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(cfg.seed, b as u64));
            let point: Vec<usize> = dims
                .iter()
                .zip(&center_coords)
                .map(|(&(lo, hi), &c)| {
                    if hi == lo || sigma == 0.0 {
                        return c;
                    }
                    let width = (hi - lo) as f64;
                    let z = (c - lo) as f64 / width;
                    let drawn = (z + sigma * normal.sample(&mut rng)).clamp(0.0, 1.0);
                    (lo as f64 + drawn * width).round() as usize
                })
                .collect();
            let (delays, window) = point.split_at(dims.len() - 1);
            DelayVector {
                delays: delays.to_vec(),
                window: window[0],
            }
        })
        .collect();

    let members: Result<Vec<TsmbMember>> = maybe_parallel(cfg.b, |b| {
        let delays = sampled[b].clone();
        let aligned = align(train, &delays).map_err(|e| with_member(b, e))?;
        let learner =
            fit_aligned(&cfg.member_learner(b), &aligned).map_err(|e| with_member(b, e))?;
        Ok(TsmbMember { delays, learner })
    });
    Ok(TsmbModel {
        config: cfg.clone(),
        members: members?,
    })
}

/// Fit a single model at a fixed delay vector (`no-alignment` and
/// `real-delay` baselines).
pub fn fit_at(
    train: &TimeSeriesDataset,
    learner: &LearnerSpec,
    dv: &DelayVector,
) -> Result<FittedLearner> {
    let aligned = align(train, dv)?;
    fit_aligned(learner, &aligned)
}

/// Predict with a single model at its fixed delay vector.
pub fn point_predict(
    learner: &FittedLearner,
    dv: &DelayVector,
    test: &TimeSeriesDataset,
    max_rows: Option<usize>,
) -> Result<Vec<f64>> {
    let aligned = align(test, dv)?;
    let mut rows = aligned.rows();
    if let Some(cap) = max_rows {
        rows = rows.min(cap);
    }
    let columns: Vec<Vec<f64>> = aligned.columns().iter().map(|c| c[..rows].to_vec()).collect();
    learner.predict(&columns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::TaskKind;
    use crate::injection::{synth_dataset, SynthSpec};
    use crate::learners::{LearnerKind, Loss};

    fn noiseless_train() -> TimeSeriesDataset {
        synth_dataset(&SynthSpec {
            n_features: 1,
            length: 700,
            true_delays: vec![7],
            noise_sd: 0.0,
            seed: 21,
            task_kind: TaskKind::Regression,
        })
        .unwrap()
    }

    fn small_cfg(b: usize) -> TsmbConfig {
        TsmbConfig {
            b,
            score: ScoreFunction::Gcc,
            learner: LearnerSpec::linear(Loss::Squared),
            bootstrap: BlockBootstrapSpec {
                block_fraction: 0.25,
                seed: 5,
            },
            search: SearchBox::uniform(1, (0, 15), (1, 2))
                .unwrap()
                .with_budget(400, 200),
            seed: 5,
        }
    }

    #[test]
    fn noiseless_members_all_recover_the_true_delay() {
        let train = noiseless_train();
        let model = tsmb_train(&train, &small_cfg(6)).unwrap();
        assert_eq!(model.b(), 6);
        for member in &model.members {
            assert_eq!(member.delays.delays, vec![7]);
            assert_eq!(member.delays.window, 1);
        }
    }

    #[test]
    fn prediction_mean_is_the_member_average() {
        let train = noiseless_train();
        let model = tsmb_train(&train, &small_cfg(5)).unwrap();
        let dist = tsmb_predict(&model, &train, 0.2).unwrap();
        for j in 0..dist.rows() {
            let avg: f64 =
                dist.members().iter().map(|m| m[j]).sum::<f64>() / dist.b() as f64;
            assert!((dist.mean()[j] - avg).abs() < 1e-12);
        }
    }

    #[test]
    fn member_permutation_is_bitwise_invisible() {
        let members = vec![
            vec![3.0, -1.0, 0.25],
            vec![1.0, 2.0, 0.5],
            vec![-2.0, 0.5, 0.125],
            vec![7.0, 1.5, 0.0625],
        ];
        let a = PredictionDistribution::from_members(members.clone(), 0.2).unwrap();
        let mut permuted = members;
        permuted.rotate_left(2);
        permuted.swap(0, 1);
        let b = PredictionDistribution::from_members(permuted, 0.2).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(a.mean()), bits(b.mean()));
        assert_eq!(bits(a.lower()), bits(b.lower()));
        assert_eq!(bits(a.upper()), bits(b.upper()));
    }

    #[test]
    fn nearest_rank_interval_matches_hand_computation() {
        // Members predicting 0..9 for a single row at alpha = 0.2: mean 4.5,
        // bounds at the empirical 10th and 90th percentiles.
        let members: Vec<Vec<f64>> = (0..10).map(|v| vec![v as f64]).collect();
        let dist = PredictionDistribution::from_members(members, 0.2).unwrap();
        assert!((dist.mean()[0] - 4.5).abs() < 1e-12);
        assert_eq!(dist.lower()[0], 0.0); // ceil(0.1 * 10) = rank 1
        assert_eq!(dist.upper()[0], 8.0); // ceil(0.9 * 10) = rank 9
    }

    #[test]
    fn intervals_are_nested_as_alpha_shrinks() {
        let members: Vec<Vec<f64>> = (0..37).map(|v| vec![(v as f64 * 1.37).sin()]).collect();
        let dist = PredictionDistribution::from_members(members, 0.5).unwrap();
        let mut last = dist.interval_at(0.5).unwrap();
        for alpha in [0.2, 0.1, 0.05] {
            let next = dist.interval_at(alpha).unwrap();
            for (prev, cur) in last.iter().zip(&next) {
                assert!(cur.0 <= prev.0 && cur.1 >= prev.1);
            }
            last = next;
        }
    }

    #[test]
    fn identical_members_give_zero_width_intervals() {
        let members = vec![vec![2.5, 1.0]; 8];
        let dist = PredictionDistribution::from_members(members, 0.1).unwrap();
        assert_eq!(dist.lower(), dist.mean());
        assert_eq!(dist.upper(), dist.mean());
    }

    #[test]
    fn single_member_model_predicts_like_its_member() {
        let train = noiseless_train();
        let model = tsmb_train(&train, &small_cfg(1)).unwrap();
        let dist = tsmb_predict(&model, &train, 0.5).unwrap();
        assert_eq!(dist.b(), 1);
        assert_eq!(dist.mean(), &dist.members()[0][..]);
        assert_eq!(dist.lower(), dist.upper());
    }

    #[test]
    fn mean_delay_vector_rounds_half_away_from_zero() {
        let dv = |d: usize, w: usize| DelayVector {
            delays: vec![d],
            window: w,
        };
        let mean = mean_delay_vector(&[dv(4, 1), dv(6, 1)]);
        assert_eq!(mean.delays, vec![5]);
        let mean = mean_delay_vector(&[dv(4, 1), dv(5, 2)]);
        assert_eq!(mean.delays, vec![5]); // 4.5 rounds away from zero
        assert_eq!(mean.window, 2);
    }

    #[test]
    fn tdb_on_noiseless_data_recovers_the_truth() {
        let train = noiseless_train();
        let (_, mean) = tdb_train(&train, &small_cfg(4)).unwrap();
        assert_eq!(mean.delays, vec![7]);
        assert_eq!(mean.window, 1);
    }

    #[test]
    fn perturbed_with_zero_sigma_clones_the_point_estimate() {
        let train = noiseless_train();
        let cfg = small_cfg(5);
        let model = perturbed_train(&train, &cfg, 0.0).unwrap();
        let (_, tde) = tde_point_train(&train, &cfg).unwrap();
        for member in &model.members {
            assert_eq!(member.delays, tde);
        }
    }

    #[test]
    fn perturbed_draws_concentrate_and_clip_at_bounds() {
        let train = noiseless_train();
        let cfg = small_cfg(40);
        let model = perturbed_train(&train, &cfg, 0.1).unwrap();
        let center = tde_point_train(&train, &cfg).unwrap().1.delays[0] as f64;
        let width = 15.0;
        for member in &model.members {
            let d = member.delays.delays[0];
            assert!(d <= 15, "draw {d} outside search range");
            // 6 sigma on the normalized scale, mapped back to ticks.
            assert!(
                (d as f64 - center).abs() <= 6.0 * 0.1 * width + 1.0,
                "draw {d} implausibly far from {center}"
            );
        }
        let distinct: std::collections::HashSet<usize> =
            model.members.iter().map(|m| m.delays.delays[0]).collect();
        assert!(distinct.len() > 1, "sigma > 0 should spread the members");
    }

    #[test]
    fn tde_point_recovers_truth_and_stays_in_box() {
        let train = noiseless_train();
        let cfg = small_cfg(1);
        let (_, dv) = tde_point_train(&train, &cfg).unwrap();
        assert_eq!(dv.delays, vec![7]);
        assert!(cfg.search.contains(&dv));
    }

    #[test]
    fn model_artifact_round_trips_bit_identically() {
        let train = noiseless_train();
        let model = tsmb_train(&train, &small_cfg(3)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        model.save(&path).unwrap();
        let loaded = TsmbModel::load(&path).unwrap();

        let a = tsmb_predict(&model, &train, 0.2).unwrap();
        let b = tsmb_predict(&loaded, &train, 0.2).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(a.mean()), bits(b.mean()));
        assert_eq!(bits(a.lower()), bits(b.lower()));
        assert_eq!(bits(a.upper()), bits(b.upper()));
    }

    #[test]
    fn training_rejects_mismatched_search_box() {
        let train = noiseless_train();
        let mut cfg = small_cfg(2);
        cfg.search = SearchBox::uniform(3, (0, 15), (1, 2)).unwrap();
        assert!(matches!(tsmb_train(&train, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn gbdt_members_work_end_to_end() {
        let train = synth_dataset(&SynthSpec {
            n_features: 2,
            length: 500,
            true_delays: vec![5, 9],
            noise_sd: 0.05,
            seed: 3,
            task_kind: TaskKind::Classification,
        })
        .unwrap();
        let mut cfg = small_cfg(3);
        cfg.learner = LearnerSpec {
            kind: LearnerKind::Gbdt,
            ..LearnerSpec::gbdt(Loss::Logistic)
        };
        cfg.learner.gbdt.n_trees = 20;
        cfg.search = SearchBox::uniform(2, (0, 12), (1, 2))
            .unwrap()
            .with_budget(250, 100);
        let model = tsmb_train(&train, &cfg).unwrap();
        let dist = tsmb_predict(&model, &train, 0.2).unwrap();
        for j in 0..dist.rows() {
            assert!((0.0..=1.0).contains(&dist.mean()[j]));
        }
    }
}
