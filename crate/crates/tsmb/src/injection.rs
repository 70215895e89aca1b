//! Delay injection into clean datasets, plus synthetic misaligned data for
//! benchmarks.
//!
//! Injection rewrites each feature series so that the value matching target
//! tick `tau` sits at position `tau + delay_i`, which is what delay-shifted
//! alignment then undoes. Values are pulled from later positions of the same
//! series; edge indices whose source would fall off the series end are
//! dropped, shortening the dataset by the largest injected delay. The target
//! is never transformed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{TaskKind, TimeSeriesDataset};
use crate::error::{Error, Result};

/// One constant delay per feature series, in ticks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedDelaySpec {
    pub delays: Vec<usize>,
}

/// A set of candidate delay vectors drawn per timestamp.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StochasticDelaySpec {
    pub candidates: Vec<Vec<usize>>,
    pub seed: u64,
}

/// Ground-truth record written alongside an injected dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InjectionTruth {
    Fixed { delays: Vec<usize> },
    Stochastic { candidates: Vec<Vec<usize>>, seed: u64 },
}

impl InjectionTruth {
    /// A single representative delay vector: the fixed delays, or the
    /// rounded componentwise mean of the stochastic candidates.
    pub fn representative_delays(&self) -> Vec<usize> {
        match self {
            InjectionTruth::Fixed { delays } => delays.clone(),
            InjectionTruth::Stochastic { candidates, .. } => {
                let n = candidates[0].len();
                (0..n)
                    .map(|i| {
                        let sum: usize = candidates.iter().map(|c| c[i]).sum();
                        ((sum as f64) / candidates.len() as f64).round() as usize
                    })
                    .collect()
            }
        }
    }
}

fn validate_delays(dataset: &TimeSeriesDataset, delays: &[usize]) -> Result<usize> {
    if delays.len() != dataset.n_features() {
        return Err(Error::Config(format!(
            "{} injected delays for {} series",
            delays.len(),
            dataset.n_features()
        )));
    }
    let max_delay = delays.iter().copied().max().unwrap_or(0);
    if max_delay + 2 > dataset.target_len() {
        return Err(Error::Data(format!(
            "injected delay {} too large for target length {}",
            max_delay,
            dataset.target_len()
        )));
    }
    Ok(max_delay)
}

/// Inject a consistent per-series delay.
///
/// Feature `i` becomes `x_i[u + max_delay - delay_i]`; the target keeps its
/// last `m - max_delay` values bit-identical. Aligning the result at the
/// injected delays reproduces the original design matrix on the overlap.
pub fn inject_fixed(
    dataset: &TimeSeriesDataset,
    spec: &FixedDelaySpec,
) -> Result<(TimeSeriesDataset, InjectionTruth)> {
    let max_delay = validate_delays(dataset, &spec.delays)?;
    let shifted = shift_features(dataset, max_delay, |_u| &spec.delays);
    let injected = rebuild(dataset, shifted, max_delay)?;
    Ok((
        injected,
        InjectionTruth::Fixed {
            delays: spec.delays.clone(),
        },
    ))
}

/// Inject a per-timestamp delay drawn uniformly from a candidate set.
///
/// One candidate vector is drawn per timestamp (seeded), shared by all
/// features at that timestamp.
pub fn inject_stochastic(
    dataset: &TimeSeriesDataset,
    spec: &StochasticDelaySpec,
) -> Result<(TimeSeriesDataset, InjectionTruth)> {
    if spec.candidates.len() < 2 {
        return Err(Error::Config(
            "stochastic injection needs at least 2 candidate delay vectors".into(),
        ));
    }
    let mut max_delay = 0;
    for candidate in &spec.candidates {
        max_delay = max_delay.max(validate_delays(dataset, candidate)?);
    }

    let len = dataset.series_len() - max_delay;
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let draws: Vec<usize> = (0..len)
        .map(|_| rng.gen_range(0..spec.candidates.len()))
        .collect();

    let shifted = shift_features(dataset, max_delay, |u| &spec.candidates[draws[u]]);
    let injected = rebuild(dataset, shifted, max_delay)?;
    Ok((
        injected,
        InjectionTruth::Stochastic {
            candidates: spec.candidates.clone(),
            seed: spec.seed,
        },
    ))
}

fn shift_features<'a>(
    dataset: &TimeSeriesDataset,
    max_delay: usize,
    delays_at: impl Fn(usize) -> &'a [usize],
) -> Vec<Vec<f64>> {
    let len = dataset.series_len() - max_delay;
    (0..dataset.n_features())
        .map(|i| {
            let series = dataset.feature(i);
            (0..len)
                .map(|u| series[u + max_delay - delays_at(u)[i]])
                .collect()
        })
        .collect()
}

fn rebuild(
    dataset: &TimeSeriesDataset,
    features: Vec<Vec<f64>>,
    max_delay: usize,
) -> Result<TimeSeriesDataset> {
    // Keep the target's most recent m - max_delay values; the shifted
    // features cover exactly that window.
    let t = dataset.target_start();
    let target = dataset.target()[max_delay..].to_vec();
    TimeSeriesDataset::new(
        features,
        dataset.feature_names().to_vec(),
        target,
        t,
        dataset.tick_seconds(),
        dataset.task_kind(),
    )
}

/// Parameters for the synthetic misaligned benchmark generator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_features: usize,
    pub length: usize,
    pub true_delays: Vec<usize>,
    pub noise_sd: f64,
    pub seed: u64,
    pub task_kind: TaskKind,
}

/// Generate a synthetic dataset with known ground-truth delays.
///
/// Each latent is a sum of seeded sinusoids; the target is a weighted sum of
/// the latents read `delay_i` ticks ahead, plus Gaussian noise (thresholded
/// at the median for classification). The undelayed latents are emitted as
/// features, so feature `i` leads the target by exactly `true_delays[i]`.
pub fn synth_dataset(spec: &SynthSpec) -> Result<TimeSeriesDataset> {
    if spec.length == 0 {
        return Err(Error::Config("synthetic length must be positive".into()));
    }
    if spec.n_features == 0 {
        return Err(Error::Config("synthetic n_features must be positive".into()));
    }
    if spec.true_delays.len() != spec.n_features {
        return Err(Error::Config(format!(
            "{} true delays for {} features",
            spec.true_delays.len(),
            spec.n_features
        )));
    }
    let max_delay = spec.true_delays.iter().copied().max().unwrap_or(0);
    if max_delay + 2 > spec.length {
        return Err(Error::Config(format!(
            "true delay {} too large for length {}",
            max_delay, spec.length
        )));
    }

    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let latents: Vec<Vec<f64>> = (0..spec.n_features)
        .map(|_| {
            // Three incommensurate tones per latent, in distinct frequency
            // bands so cross-latent correlation stays small at every lag.
            let tones: Vec<(f64, f64, f64)> = (0..3)
                .map(|_| {
                    let freq = rng.gen_range(0.03..0.25);
                    let phase = rng.gen_range(0.0..std::f64::consts::TAU);
                    let amp = rng.gen_range(0.5..1.0);
                    (freq, phase, amp)
                })
                .collect();
            (0..spec.length)
                .map(|s| {
                    tones
                        .iter()
                        .map(|&(f, p, a)| a * (std::f64::consts::TAU * f * s as f64 + p).sin())
                        .sum()
                })
                .collect()
        })
        .collect();

    let m = spec.length - max_delay;
    let mut target: Vec<f64> = (0..m)
        .map(|tau| {
            let signal: f64 = latents
                .iter()
                .zip(&spec.true_delays)
                .map(|(latent, &delay)| latent[tau + delay])
                .sum();
            signal + spec.noise_sd * gaussian(&mut rng)
        })
        .collect();

    if spec.task_kind == TaskKind::Classification {
        let mut sorted = target.clone();
        sorted.sort_by(f64::total_cmp);
        let median = sorted[sorted.len() / 2];
        for v in &mut target {
            *v = if *v > median { 1.0 } else { 0.0 };
        }
    }

    let names = (0..spec.n_features).map(|i| format!("x{i}")).collect();
    TimeSeriesDataset::new(latents, names, target, 0, 1.0, spec.task_kind)
}

fn gaussian(rng: &mut impl Rng) -> f64 {
    // Box-Muller.
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
