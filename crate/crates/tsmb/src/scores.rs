//! Score functions maximized during delay estimation.
//!
//! Two scores are provided, both per-feature sums against the shared target:
//! generalized cross-correlation (sum of absolute Pearson correlations at the
//! aligned lag) and time-delayed mutual information estimated with the
//! Kraskov k-nearest-neighbor estimator (variant 1).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::digamma;

use crate::dataset::{align, AlignedDataset, DelayVector, TimeSeriesDataset};
use crate::error::{Error, Result};

/// Default neighbor count for the k-NN mutual-information estimator.
pub const DEFAULT_KNN_K: usize = 3;

/// The objective maximized during delay estimation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScoreFunction {
    /// Sum of absolute Pearson correlations between each aligned column and
    /// the target.
    Gcc,
    /// Sum of k-NN mutual-information estimates between each aligned column
    /// and the target, in nats.
    Tdmi { k: usize },
}

impl ScoreFunction {
    pub fn tdmi_default() -> Self {
        ScoreFunction::Tdmi { k: DEFAULT_KNN_K }
    }
}

/// Sum of `|pearson(column_i, target)|` over all columns.
///
/// A zero-variance column or target contributes 0 with a logged warning
/// rather than failing, so optimization stays well-defined on degenerate
/// bootstrap draws.
pub fn gcc_score(aligned: &AlignedDataset) -> Result<f64> {
    if aligned.rows() < 3 {
        return Err(Error::Data(format!(
            "correlation score needs at least 3 rows, got {}",
            aligned.rows()
        )));
    }
    let target = aligned.target();
    if is_constant(target) {
        log::warn!("constant target in correlation score; score is 0");
        return Ok(0.0);
    }
    let mut total = 0.0;
    for i in 0..aligned.n_columns() {
        let column = aligned.column(i);
        if is_constant(column) {
            log::warn!("constant column {i} in correlation score; term treated as 0");
            continue;
        }
        total += pearson(column, target).abs();
    }
    Ok(total)
}

fn is_constant(values: &[f64]) -> bool {
    match values.first() {
        Some(&first) => values.iter().all(|&v| v == first),
        None => true,
    }
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

/// Mutual information between two series in nats, via the Kraskov k-NN
/// estimator (variant 1).
///
/// Joint distances use the max-norm; marginal neighbor counts are strict
/// (`|x_i - x_j| < eps_j`). A deterministic additive jitter of magnitude
/// `1e-10 * range` breaks ties, since the estimator assumes continuous
/// distributions and sensor data repeats values. Negative estimates are pure
/// estimator noise and are clamped at 0.
pub fn knn_mutual_information(a: &[f64], b: &[f64], k: usize) -> Result<f64> {
    knn_mutual_information_seeded(a, b, k, 0)
}

/// As [`knn_mutual_information`] but with a caller-chosen jitter stream, so
/// per-column evaluations stay deterministic under concurrency.
pub fn knn_mutual_information_seeded(a: &[f64], b: &[f64], k: usize, stream: u64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Data(format!(
            "series lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if k == 0 {
        return Err(Error::Config("k must be >= 1".into()));
    }
    let n = a.len();
    if n <= k {
        return Err(Error::Data(format!(
            "mutual information with k = {k} needs at least {} samples, got {n}",
            k + 1
        )));
    }

    let a = jittered(a, mix(stream, 0));
    let b = jittered(b, mix(stream, 1));

    let mut nodes: Vec<KdNode> = a
        .iter()
        .zip(&b)
        .enumerate()
        .map(|(idx, (&x, &y))| KdNode { x, y, idx })
        .collect();
    build_kdtree(&mut nodes, 0);

    let mut sorted_a = a.clone();
    let mut sorted_b = b.clone();
    sorted_a.sort_by(f64::total_cmp);
    sorted_b.sort_by(f64::total_cmp);

    let mut psi_sum = 0.0;
    let mut scratch = Vec::with_capacity(k);
    for j in 0..n {
        let query = KdNode {
            x: a[j],
            y: b[j],
            idx: j,
        };
        scratch.clear();
        kth_neighbor(&nodes, 0, &query, k, &mut scratch);
        let eps = scratch[k - 1];
        let n_a = count_strictly_within(&sorted_a, a[j], eps) - 1;
        let n_b = count_strictly_within(&sorted_b, b[j], eps) - 1;
        psi_sum += digamma((n_a + 1) as f64) + digamma((n_b + 1) as f64);
    }

    let mi = digamma(k as f64) + digamma(n as f64) - psi_sum / n as f64;
    Ok(mi.max(0.0))
}

fn jittered(values: &[f64], seed: u64) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = if hi > lo { hi - lo } else { 1.0 };
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    values
        .iter()
        .map(|&v| v + rng.gen::<f64>() * 1e-10 * scale)
        .collect()
}

fn mix(stream: u64, role: u64) -> u64 {
    // splitmix64 finalizer over (stream, role).
    let mut z = stream
        .wrapping_mul(0x9E3779B97F4A7C15)
        .wrapping_add(role)
        .wrapping_add(0x2545F4914F6CDD1D);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

#[derive(Clone, Copy)]
struct KdNode {
    x: f64,
    y: f64,
    idx: usize,
}

impl KdNode {
    fn coord(&self, axis: usize) -> f64 {
        if axis == 0 {
            self.x
        } else {
            self.y
        }
    }
}

fn build_kdtree(nodes: &mut [KdNode], axis: usize) {
    if nodes.len() <= 1 {
        return;
    }
    let mid = nodes.len() / 2;
    nodes.select_nth_unstable_by(mid, |p, q| p.coord(axis).total_cmp(&q.coord(axis)));
    build_kdtree(&mut nodes[..mid], axis ^ 1);
    let len = nodes.len();
    build_kdtree(&mut nodes[mid + 1..len], axis ^ 1);
}

/// Collect the k smallest max-norm distances from `query` to other points,
/// ascending, into `best`; the query point itself is skipped.
fn kth_neighbor(nodes: &[KdNode], axis: usize, query: &KdNode, k: usize, best: &mut Vec<f64>) {
    if nodes.is_empty() {
        return;
    }
    let mid = nodes.len() / 2;
    let node = &nodes[mid];
    if node.idx != query.idx {
        let d = (node.x - query.x).abs().max((node.y - query.y).abs());
        if best.len() < k {
            let pos = best.partition_point(|&v| v < d);
            best.insert(pos, d);
        } else if d < best[k - 1] {
            let pos = best.partition_point(|&v| v < d);
            best.insert(pos, d);
            best.pop();
        }
    }
    let diff = query.coord(axis) - node.coord(axis);
    let (near, far) = if diff <= 0.0 {
        (&nodes[..mid], &nodes[mid + 1..])
    } else {
        (&nodes[mid + 1..], &nodes[..mid])
    };
    kth_neighbor(near, axis ^ 1, query, k, best);
    if best.len() < k || diff.abs() <= best[k - 1] {
        kth_neighbor(far, axis ^ 1, query, k, best);
    }
}

fn count_strictly_within(sorted: &[f64], center: f64, eps: f64) -> usize {
    let lower = sorted.partition_point(|&v| v <= center - eps);
    let upper = sorted.partition_point(|&v| v < center + eps);
    upper - lower
}

/// Sum of per-column k-NN mutual information against the target.
pub fn tdmi_score(aligned: &AlignedDataset, k: usize) -> Result<f64> {
    let mut total = 0.0;
    for i in 0..aligned.n_columns() {
        // Jitter streams are a pure function of the column index, so
        // concurrent evaluation cannot change results.
        total += knn_mutual_information_seeded(aligned.column(i), aligned.target(), k, i as u64)?;
    }
    Ok(total)
}

/// Dispatch a score function over an already-aligned dataset.
pub fn score_aligned(aligned: &AlignedDataset, score: ScoreFunction) -> Result<f64> {
    match score {
        ScoreFunction::Gcc => gcc_score(aligned),
        ScoreFunction::Tdmi { k } => tdmi_score(aligned, k),
    }
}

/// Align `dataset` at `dv` and score it: the objective handed to the
/// optimizer.
pub fn evaluate(
    dataset: &TimeSeriesDataset,
    dv: &DelayVector,
    score: ScoreFunction,
) -> Result<f64> {
    let aligned = align(dataset, dv)?;
    score_aligned(&aligned, score)
}
