//! Moving-block bootstrap resampling of the training window.
//!
//! Blocks are sampled jointly over (features, target): each block keeps the
//! full feature history and its own target window on the shared time axis,
//! so delayed lookups stay consistent within the block. Score evaluation on a
//! resample averages per-block scores weighted by aligned length; scoring
//! across block seams would fabricate correlations that are not in the data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{align, DelayVector, TimeSeriesDataset};
use crate::error::{Error, Result};
use crate::scores::{score_aligned, ScoreFunction};

/// Default block length as a fraction of the training target.
pub const DEFAULT_BLOCK_FRACTION: f64 = 0.25;

/// Block bootstrap parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockBootstrapSpec {
    pub block_fraction: f64,
    pub seed: u64,
}

impl BlockBootstrapSpec {
    pub fn new(block_fraction: f64, seed: u64) -> Result<Self> {
        if !(block_fraction > 0.0 && block_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "block fraction must be in (0, 1], got {block_fraction}"
            )));
        }
        Ok(Self {
            block_fraction,
            seed,
        })
    }
}

/// One bootstrap resample: contiguous blocks of the training window, jointly
/// over features and target, truncated to the original target length.
#[derive(Debug, Clone)]
pub struct BootstrapSample {
    blocks: Vec<TimeSeriesDataset>,
}

impl BootstrapSample {
    pub fn blocks(&self) -> &[TimeSeriesDataset] {
        &self.blocks
    }

    /// Total resampled target length; equals the input target length.
    pub fn target_len(&self) -> usize {
        self.blocks.iter().map(TimeSeriesDataset::target_len).sum()
    }

    /// The resampled target, blocks concatenated in draw order.
    pub fn concatenated_target(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.target_len());
        for block in &self.blocks {
            out.extend_from_slice(block.target());
        }
        out
    }
}

/// Deterministic per-replicate seed derivation, so replicate `b` is stable
/// no matter how many replicates run or in what order.
pub(crate) fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_mul(0x9E3779B97F4A7C15)
        .wrapping_add(stream)
        .wrapping_add(0xD1B54A32D192ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Draw one moving-block bootstrap resample of `train`.
///
/// Block length is `round(block_fraction * m)`. `ceil(m / L)` start positions
/// are drawn uniformly with replacement from the valid starts `[0, m - L]`;
/// the final block is cut so the output target length is exactly `m`.
/// Deterministic given `(spec.seed, replicate_index)`.
pub fn block_bootstrap_sample(
    train: &TimeSeriesDataset,
    spec: &BlockBootstrapSpec,
    replicate_index: usize,
) -> Result<BootstrapSample> {
    BlockBootstrapSpec::new(spec.block_fraction, spec.seed)?;
    let m = train.target_len();
    let block_len = ((spec.block_fraction * m as f64).round() as usize).min(m);
    if block_len < 2 {
        return Err(Error::Config(format!(
            "block length {block_len} too short (fraction {} of {m} rows)",
            spec.block_fraction
        )));
    }
    if block_len == m {
        // A single whole block: the resample is one copy of the training data.
        return Ok(BootstrapSample {
            blocks: vec![train.clone()],
        });
    }
    if m < 2 * block_len {
        return Err(Error::Config(format!(
            "target length {m} cannot hold 2 distinct blocks of length {block_len}"
        )));
    }

    let n_blocks = m.div_ceil(block_len);
    let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(spec.seed, replicate_index as u64));
    let t = train.target_start();

    let mut blocks = Vec::with_capacity(n_blocks);
    let mut remaining = m;
    for _ in 0..n_blocks {
        let start = rng.gen_range(0..=m - block_len);
        let len = block_len.min(remaining);
        blocks.push(train.with_target_window(t + start, len)?);
        remaining -= len;
    }
    debug_assert_eq!(remaining, 0);
    Ok(BootstrapSample { blocks })
}

/// Score a delay vector on a bootstrap resample: per-block scores averaged
/// with aligned-length weights.
///
/// Blocks too short to score after delay/window truncation are skipped with
/// zero weight; a resample where no block is scoreable is an error.
pub fn score_sample(
    sample: &BootstrapSample,
    dv: &DelayVector,
    score: ScoreFunction,
) -> Result<f64> {
    let mut weighted = 0.0;
    let mut weight = 0.0;
    for block in sample.blocks() {
        let aligned = match align(block, dv) {
            Ok(a) if a.rows() >= 3 => a,
            Ok(_) => {
                log::debug!("skipping block too short to score at {dv:?}");
                continue;
            }
            Err(Error::AlignmentOverflow { .. }) => {
                log::debug!("skipping block with no overlap at {dv:?}");
                continue;
            }
            Err(e) => return Err(e),
        };
        let rows = aligned.rows() as f64;
        weighted += rows * score_aligned(&aligned, score)?;
        weight += rows;
    }
    if weight == 0.0 {
        return Err(Error::Data(format!(
            "no block of the bootstrap sample can be scored at {dv:?}"
        )));
    }
    Ok(weighted / weight)
}
