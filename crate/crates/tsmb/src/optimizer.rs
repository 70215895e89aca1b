//! DIRECT (DIviding RECTangles) global optimizer over the joint
//! (delays, window) integer box.
//!
//! The search runs on the unit hypercube: each iteration selects potentially
//! optimal rectangles by the lower-convex-hull criterion over
//! (diameter, value), trisects them along their longest sides, and evaluates
//! the new centers. Continuous centers are rounded to the integer lattice
//! before evaluation and memoized, so repeated lattice points cost a single
//! objective call. Maximization is run as minimization of the negated
//! objective. The whole procedure is deterministic.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::dataset::DelayVector;
use crate::error::{Error, Result};

/// Default objective-evaluation budget per optimizer call.
pub const DEFAULT_BUDGET: usize = 2000;
/// Default iteration cap.
pub const DEFAULT_MAX_ITERATIONS: usize = 1000;
/// Slack parameter for the potentially-optimal test.
const EPSILON: f64 = 1e-4;

/// Integer search box: one bound pair per delay dimension plus the
/// moving-average window dimension, and the evaluation budget.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBox {
    pub delay_bounds: Vec<(usize, usize)>,
    pub window_bounds: (usize, usize),
    pub max_evaluations: usize,
    pub max_iterations: usize,
}

impl SearchBox {
    pub fn new(delay_bounds: Vec<(usize, usize)>, window_bounds: (usize, usize)) -> Result<Self> {
        let b = Self {
            delay_bounds,
            window_bounds,
            max_evaluations: DEFAULT_BUDGET,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        };
        b.validate()?;
        Ok(b)
    }

    /// Same delay range for all `n` features.
    pub fn uniform(
        n: usize,
        delay_range: (usize, usize),
        window_range: (usize, usize),
    ) -> Result<Self> {
        Self::new(vec![delay_range; n], window_range)
    }

    pub fn with_budget(mut self, max_evaluations: usize, max_iterations: usize) -> Self {
        self.max_evaluations = max_evaluations;
        self.max_iterations = max_iterations;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for &(lo, hi) in self.delay_bounds.iter().chain([&self.window_bounds]) {
            if lo > hi {
                return Err(Error::Config(format!(
                    "search bound lower {lo} exceeds upper {hi}"
                )));
            }
        }
        if self.window_bounds.0 == 0 {
            return Err(Error::Config("window lower bound must be >= 1".into()));
        }
        if self.max_evaluations == 0 {
            return Err(Error::Config("evaluation budget must be >= 1".into()));
        }
        Ok(())
    }

    /// All dimensions, delays first, window last.
    fn dims(&self) -> Vec<(usize, usize)> {
        let mut d = self.delay_bounds.clone();
        d.push(self.window_bounds);
        d
    }

    pub fn n_delays(&self) -> usize {
        self.delay_bounds.len()
    }

    pub fn contains(&self, dv: &DelayVector) -> bool {
        dv.delays.len() == self.delay_bounds.len()
            && dv
                .delays
                .iter()
                .zip(&self.delay_bounds)
                .all(|(&d, &(lo, hi))| d >= lo && d <= hi)
            && dv.window >= self.window_bounds.0
            && dv.window <= self.window_bounds.1
    }

    /// The corner with the largest delays and window; alignment at this point
    /// truncates at least as much as any in-box point.
    pub fn upper_corner(&self) -> DelayVector {
        DelayVector {
            delays: self.delay_bounds.iter().map(|&(_, hi)| hi).collect(),
            window: self.window_bounds.1,
        }
    }
}

/// Outcome of one optimizer run.
#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub best: DelayVector,
    pub best_score: f64,
    pub evaluations: usize,
    /// Distinct lattice evaluations in the order they happened.
    pub trace: Vec<(DelayVector, f64)>,
}

struct Rect {
    /// Center in the unit cube, one coordinate per active dimension.
    center: Vec<f64>,
    /// Trisection count per active dimension; side length is `3^-level`.
    levels: Vec<u32>,
    /// Negated objective value at the center.
    value: f64,
    creation: usize,
}

impl Rect {
    fn diameter(&self) -> f64 {
        // Sum over sorted levels so identical level multisets produce
        // bit-identical diameters, which the grouping below relies on.
        let mut sorted = self.levels.clone();
        sorted.sort_unstable();
        let sum: f64 = sorted.iter().map(|&k| 9.0f64.powi(-(k as i32))).sum();
        0.5 * sum.sqrt()
    }
}

struct SplitSample {
    dim: usize,
    v_plus: f64,
    v_minus: f64,
    plus: Vec<f64>,
    minus: Vec<f64>,
}

struct Evaluator<'a, F> {
    objective: F,
    dims: Vec<(usize, usize)>,
    active: Vec<usize>,
    n_delays: usize,
    budget: usize,
    memo: HashMap<Vec<usize>, f64>,
    trace: Vec<(DelayVector, f64)>,
    best: Option<(Vec<usize>, f64)>,
    _marker: std::marker::PhantomData<&'a ()>,
}

impl<F: FnMut(&DelayVector) -> Result<f64>> Evaluator<'_, F> {
    fn lattice_point(&self, center: &[f64]) -> Vec<usize> {
        let mut point: Vec<usize> = self.dims.iter().map(|&(lo, _)| lo).collect();
        for (c, &dim) in center.iter().zip(&self.active) {
            let (lo, hi) = self.dims[dim];
            let mapped = lo as f64 + c * (hi - lo) as f64;
            point[dim] = (mapped.round() as usize).clamp(lo, hi);
        }
        point
    }

    fn to_delay_vector(&self, point: &[usize]) -> DelayVector {
        DelayVector {
            delays: point[..self.n_delays].to_vec(),
            window: point[self.n_delays],
        }
    }

    /// Negated objective at a center; `None` means the budget is spent.
    fn eval(&mut self, center: &[f64]) -> Result<Option<f64>> {
        let point = self.lattice_point(center);
        if let Some(&v) = self.memo.get(&point) {
            return Ok(Some(v));
        }
        if self.memo.len() >= self.budget {
            return Ok(None);
        }
        let dv = self.to_delay_vector(&point);
        let score = (self.objective)(&dv).map_err(|e| Error::ObjectiveFailure {
            point: point.clone(),
            source: Box::new(e),
        })?;
        let value = -score;
        self.memo.insert(point.clone(), value);
        self.trace.push((dv, score));
        let better = match &self.best {
            Some((_, best)) => value < *best,
            None => true,
        };
        if better {
            self.best = Some((point, value));
        }
        Ok(Some(value))
    }
}

/// Maximize `objective` over the integer box with DIRECT.
///
/// Stops at the evaluation budget or iteration cap and returns the best
/// evaluated lattice point. Objective errors abort the run with the failing
/// point attached.
pub fn direct_maximize<F>(mut objective: F, search: &SearchBox) -> Result<OptimizationResult>
where
    F: FnMut(&DelayVector) -> Result<f64>,
{
    search.validate()?;
    let dims = search.dims();
    let active: Vec<usize> = dims
        .iter()
        .enumerate()
        .filter(|&(_, &(lo, hi))| hi > lo)
        .map(|(i, _)| i)
        .collect();

    let mut ev = Evaluator {
        objective: &mut objective,
        dims: dims.clone(),
        active: active.clone(),
        n_delays: search.n_delays(),
        budget: search.max_evaluations,
        memo: HashMap::new(),
        trace: Vec::new(),
        best: None,
        _marker: std::marker::PhantomData,
    };

    let d = active.len();
    let center = vec![0.5; d];
    let root_value = match ev.eval(&center)? {
        Some(v) => v,
        None => unreachable!("budget validated >= 1"),
    };

    if d > 0 {
        let mut rects = vec![Rect {
            center,
            levels: vec![0; d],
            value: root_value,
            creation: 0,
        }];
        let mut creation_counter = 1usize;

        'outer: for _ in 0..search.max_iterations {
            if ev.memo.len() >= ev.budget {
                break;
            }
            let selected = potentially_optimal(&rects);
            if selected.is_empty() {
                break;
            }
            for rect_idx in selected {
                // Longest sides are the dimensions at the minimum level.
                let min_level = *rects[rect_idx].levels.iter().min().unwrap();
                let split_dims: Vec<usize> = (0..d)
                    .filter(|&i| rects[rect_idx].levels[i] == min_level)
                    .collect();
                let delta = 3.0f64.powi(-(min_level as i32 + 1));

                let mut samples: Vec<SplitSample> = Vec::new();
                for &dim in &split_dims {
                    let mut plus = rects[rect_idx].center.clone();
                    plus[dim] += delta;
                    let mut minus = rects[rect_idx].center.clone();
                    minus[dim] -= delta;
                    let (v_plus, v_minus) = match (ev.eval(&plus)?, ev.eval(&minus)?) {
                        (Some(a), Some(b)) => (a, b),
                        _ => break 'outer,
                    };
                    samples.push(SplitSample {
                        dim,
                        v_plus,
                        v_minus,
                        plus,
                        minus,
                    });
                }

                // Split along the most promising dimension first.
                samples.sort_by(|a, b| {
                    a.v_plus
                        .min(a.v_minus)
                        .total_cmp(&b.v_plus.min(b.v_minus))
                        .then(a.dim.cmp(&b.dim))
                });
                for sample in samples {
                    rects[rect_idx].levels[sample.dim] += 1;
                    let levels = rects[rect_idx].levels.clone();
                    rects.push(Rect {
                        center: sample.plus,
                        levels: levels.clone(),
                        value: sample.v_plus,
                        creation: creation_counter,
                    });
                    creation_counter += 1;
                    rects.push(Rect {
                        center: sample.minus,
                        levels,
                        value: sample.v_minus,
                        creation: creation_counter,
                    });
                    creation_counter += 1;
                }
            }
        }
    }

    let (best_point, best_value) = ev.best.take().expect("at least one evaluation");
    Ok(OptimizationResult {
        best: ev.to_delay_vector(&best_point),
        best_score: -best_value,
        evaluations: ev.memo.len(),
        trace: ev.trace,
    })
}

/// Indices of potentially optimal rectangles, ordered by diameter then
/// creation index.
fn potentially_optimal(rects: &[Rect]) -> Vec<usize> {
    // One candidate per diameter class: the lowest value, ties broken by
    // lowest creation index. Positive-float bit patterns order like values.
    let mut per_diameter: HashMap<u64, usize> = HashMap::new();
    for (i, r) in rects.iter().enumerate() {
        let key = r.diameter().to_bits();
        match per_diameter.entry(key) {
            std::collections::hash_map::Entry::Vacant(e) => {
                e.insert(i);
            }
            std::collections::hash_map::Entry::Occupied(mut e) => {
                let cur = &rects[*e.get()];
                if (r.value, r.creation) < (cur.value, cur.creation) {
                    e.insert(i);
                }
            }
        }
    }
    let mut candidates: Vec<(f64, f64, usize)> = per_diameter
        .into_iter()
        .map(|(bits, i)| (f64::from_bits(bits), rects[i].value, i))
        .collect();
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));

    let f_min = candidates
        .iter()
        .map(|&(_, v, _)| v)
        .fold(f64::INFINITY, f64::min);

    let mut selected = Vec::new();
    for (j, &(d_j, v_j, idx)) in candidates.iter().enumerate() {
        let mut k_lo = 0.0f64;
        for &(d_i, v_i, _) in &candidates[..j] {
            k_lo = k_lo.max((v_j - v_i) / (d_j - d_i));
        }
        let mut k_hi = f64::INFINITY;
        for &(d_i, v_i, _) in &candidates[j + 1..] {
            k_hi = k_hi.min((v_i - v_j) / (d_i - d_j));
        }
        if k_lo > k_hi {
            continue;
        }
        if k_hi.is_finite() {
            let passes = if f_min != 0.0 {
                v_j - k_hi * d_j <= f_min - EPSILON * f_min.abs()
            } else {
                v_j <= k_hi * d_j
            };
            if !passes {
                continue;
            }
        }
        selected.push(idx);
    }
    selected.sort_by_key(|&i| (rects[i].diameter().to_bits(), rects[i].creation));
    selected
}
