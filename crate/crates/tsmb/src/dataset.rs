//! Time-series data model: CSV ingestion, chronological splitting,
//! moving-average smoothing, and delay-shifted alignment.
//!
//! A dataset holds `n` feature series of common length `M` plus a target of
//! length `m` that starts at tick `t` on the shared time axis (`t + m <= M`).
//! Feature history before and after the target window is kept so that delayed
//! lookups `x_i[t + delay_i + j]` stay valid.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Kind of prediction task carried by a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Regression,
    Classification,
}

/// A multivariate time series: feature matrix plus target window.
///
/// Immutable after construction; operations on it are pure functions.
#[derive(Debug, Clone)]
pub struct TimeSeriesDataset {
    features: Vec<Vec<f64>>,
    feature_names: Vec<String>,
    target: Vec<f64>,
    target_start: usize,
    tick_seconds: f64,
    task_kind: TaskKind,
}

impl TimeSeriesDataset {
    /// Build a dataset, validating all structural invariants.
    pub fn new(
        features: Vec<Vec<f64>>,
        feature_names: Vec<String>,
        target: Vec<f64>,
        target_start: usize,
        tick_seconds: f64,
        task_kind: TaskKind,
    ) -> Result<Self> {
        if feature_names.len() != features.len() {
            return Err(Error::Data(format!(
                "{} feature names for {} series",
                feature_names.len(),
                features.len()
            )));
        }
        if !tick_seconds.is_finite() || tick_seconds <= 0.0 {
            return Err(Error::Data(format!(
                "tick_seconds must be positive, got {tick_seconds}"
            )));
        }
        let series_len = features.first().map_or(target_start + target.len(), Vec::len);
        for (name, series) in feature_names.iter().zip(&features) {
            if series.len() != series_len {
                return Err(Error::Data(format!(
                    "series '{}' has length {}, expected {}",
                    name,
                    series.len(),
                    series_len
                )));
            }
            if let Some(bad) = series.iter().position(|v| !v.is_finite()) {
                return Err(Error::Data(format!(
                    "series '{name}' has a non-finite value at index {bad}"
                )));
            }
        }
        if target_start + target.len() > series_len {
            return Err(Error::Data(format!(
                "target window [{}, {}) exceeds series length {}",
                target_start,
                target_start + target.len(),
                series_len
            )));
        }
        for (j, &v) in target.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Data(format!(
                    "target has a non-finite value at index {j}"
                )));
            }
            if task_kind == TaskKind::Classification && v != 0.0 && v != 1.0 {
                return Err(Error::Data(format!(
                    "classification target must be 0 or 1, got {v} at index {j}"
                )));
            }
        }
        Ok(Self {
            features,
            feature_names,
            target,
            target_start,
            tick_seconds,
            task_kind,
        })
    }

    /// Number of feature series `n`.
    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    /// Common feature series length `M`.
    pub fn series_len(&self) -> usize {
        self.features
            .first()
            .map_or(self.target_start + self.target.len(), Vec::len)
    }

    /// Target length `m`.
    pub fn target_len(&self) -> usize {
        self.target.len()
    }

    /// Target start tick `t` on the shared time axis.
    pub fn target_start(&self) -> usize {
        self.target_start
    }

    pub fn tick_seconds(&self) -> f64 {
        self.tick_seconds
    }

    pub fn task_kind(&self) -> TaskKind {
        self.task_kind
    }

    pub fn feature(&self, i: usize) -> &[f64] {
        &self.features[i]
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    /// Same data with a different target window on the shared time axis.
    ///
    /// Used by splitting and bootstrap blocks: the feature matrix is carried
    /// whole so delayed lookups remain valid inside the new window.
    pub fn with_target_window(&self, start: usize, len: usize) -> Result<Self> {
        if start < self.target_start || start + len > self.target_start + self.target.len() {
            return Err(Error::Data(format!(
                "window [{}, {}) outside target range [{}, {})",
                start,
                start + len,
                self.target_start,
                self.target_start + self.target.len()
            )));
        }
        let lo = start - self.target_start;
        Self::new(
            self.features.clone(),
            self.feature_names.clone(),
            self.target[lo..lo + len].to_vec(),
            start,
            self.tick_seconds,
            self.task_kind,
        )
    }
}

/// Integer per-series delays plus the moving-average window, the variable
/// optimized during delay estimation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelayVector {
    pub delays: Vec<usize>,
    pub window: usize,
}

impl DelayVector {
    pub fn new(delays: Vec<usize>, window: usize) -> Result<Self> {
        if window == 0 {
            return Err(Error::Config("smoothing window must be >= 1".into()));
        }
        Ok(Self { delays, window })
    }

    /// All-zero delays with the identity window.
    pub fn zero(n: usize) -> Self {
        Self {
            delays: vec![0; n],
            window: 1,
        }
    }
}

/// The delay-aligned design matrix paired with its target.
///
/// Column `i`, row `j` is the smoothed value of series `i` at absolute index
/// `t + delay_i + j`; the target row `j` is `y[t + j]`.
#[derive(Debug, Clone)]
pub struct AlignedDataset {
    columns: Vec<Vec<f64>>,
    target: Vec<f64>,
}

impl AlignedDataset {
    pub fn new(columns: Vec<Vec<f64>>, target: Vec<f64>) -> Self {
        debug_assert!(columns.iter().all(|c| c.len() == target.len()));
        Self { columns, target }
    }

    pub fn rows(&self) -> usize {
        self.target.len()
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, i: usize) -> &[f64] {
        &self.columns[i]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    /// Gather row `j` across columns.
    pub fn row(&self, j: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[j]).collect()
    }
}

/// Chronological train/validation/test fractions (no shuffling).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl SplitSpec {
    pub fn new(train: f64, validation: f64, test: f64) -> Result<Self> {
        for (name, f) in [("train", train), ("validation", validation), ("test", test)] {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::Config(format!(
                    "split fraction '{name}' must be in [0, 1], got {f}"
                )));
            }
        }
        let sum = train + validation + test;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "split fractions must sum to 1, got {sum}"
            )));
        }
        Ok(Self {
            train,
            validation,
            test,
        })
    }
}

/// Load a dataset from a CSV file with a header row.
///
/// Every non-target column becomes a feature series, except an optional first
/// column named `timestamp`, which is ignored for computation but must be
/// monotonically increasing when present. The loaded dataset has `t = 0` and
/// `m = M =` row count.
pub fn load_csv(
    path: impl AsRef<Path>,
    target_column: &str,
    task_kind: TaskKind,
) -> Result<TimeSeriesDataset> {
    let mut reader = csv::Reader::from_path(path.as_ref())?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let target_idx = headers
        .iter()
        .position(|h| h == target_column)
        .ok_or_else(|| Error::MissingColumn(target_column.to_owned()))?;
    let timestamp_idx = (headers.first().map(String::as_str) == Some("timestamp")
        && target_idx != 0)
        .then_some(0usize);

    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != target_idx && Some(i) != timestamp_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut features: Vec<Vec<f64>> = vec![Vec::new(); feature_names.len()];
    let mut target = Vec::new();
    let mut prev_timestamp: Option<String> = None;

    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let mut col = 0usize;
        for (i, raw) in record.iter().enumerate() {
            if Some(i) == timestamp_idx {
                if let Some(prev) = &prev_timestamp {
                    if !timestamp_increases(prev, raw) {
                        return Err(Error::Data(format!(
                            "timestamp not monotonically increasing at row {row}: \
                             '{prev}' then '{raw}'"
                        )));
                    }
                }
                prev_timestamp = Some(raw.to_owned());
                continue;
            }
            let value: f64 = raw.trim().parse().map_err(|_| Error::NonNumericCell {
                column: headers[i].clone(),
                row,
                value: raw.to_owned(),
            })?;
            if i == target_idx {
                target.push(value);
            } else {
                features[col].push(value);
                col += 1;
            }
        }
    }

    if target.len() < 2 {
        return Err(Error::Data(format!(
            "need at least 2 data rows, got {}",
            target.len()
        )));
    }
    TimeSeriesDataset::new(features, feature_names, target, 0, 1.0, task_kind)
}

/// Write a dataset back to CSV. Only square datasets (`t = 0`, `m = M`) have a
/// one-row-per-tick representation.
pub fn write_csv(dataset: &TimeSeriesDataset, path: impl AsRef<Path>) -> Result<()> {
    if dataset.target_start() != 0 || dataset.target_len() != dataset.series_len() {
        return Err(Error::Data(
            "only datasets with t = 0 and m = M can be written as CSV".into(),
        ));
    }
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    let mut header: Vec<&str> = dataset.feature_names().iter().map(String::as_str).collect();
    header.push("target");
    writer.write_record(&header)?;
    let mut row = Vec::with_capacity(header.len());
    for j in 0..dataset.target_len() {
        row.clear();
        for i in 0..dataset.n_features() {
            row.push(format_cell(dataset.feature(i)[j]));
        }
        row.push(format_cell(dataset.target()[j]));
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

fn format_cell(v: f64) -> String {
    // Shortest representation that parses back to the same f64.
    let mut buf = ryu_format(v);
    if buf.ends_with(".0") {
        buf.truncate(buf.len() - 2);
    }
    buf
}

fn ryu_format(v: f64) -> String {
    let mut s = format!("{v}");
    if s.parse::<f64>().map(f64::to_bits) != Ok(v.to_bits()) {
        s = format!("{v:?}");
    }
    s
}

fn timestamp_increases(prev: &str, next: &str) -> bool {
    match (prev.trim().parse::<f64>(), next.trim().parse::<f64>()) {
        (Ok(a), Ok(b)) => a < b,
        _ => prev < next,
    }
}

/// Trailing moving average: `out[j] = mean(series[j..j + window])`.
///
/// Output index `j` refers to the window starting at `j`, so smoothing
/// consumes `window - 1` trailing points and the output has length
/// `len - window + 1`.
pub fn moving_average(series: &[f64], window: usize) -> Result<Vec<f64>> {
    if window == 0 {
        return Err(Error::Config("moving-average window must be >= 1".into()));
    }
    if window > series.len() {
        return Err(Error::Data(format!(
            "moving-average window {} exceeds series length {}",
            window,
            series.len()
        )));
    }
    let mut out = Vec::with_capacity(series.len() - window + 1);
    for j in 0..=series.len() - window {
        let win = &series[j..j + window];
        // Incremental mean keeps constants exact; the clamp pins the result
        // inside the window's range against rounding.
        let mut mean = 0.0;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (k, &v) in win.iter().enumerate() {
            mean += (v - mean) / (k + 1) as f64;
            lo = lo.min(v);
            hi = hi.max(v);
        }
        out.push(mean.clamp(lo, hi));
    }
    Ok(out)
}

/// Smooth every feature series with `dv.window`, then extract for each series
/// the subsequence starting at `t + delay_i`.
///
/// The aligned length is `min(m, shortest fit over all shifted smoothed
/// series)`; rows beyond the shortest fit are dropped. A series whose shifted
/// window has no overlap at all is an alignment-overflow error.
pub fn align(dataset: &TimeSeriesDataset, dv: &DelayVector) -> Result<AlignedDataset> {
    if dv.delays.len() != dataset.n_features() {
        return Err(Error::Config(format!(
            "delay vector has {} entries for {} series",
            dv.delays.len(),
            dataset.n_features()
        )));
    }
    if dv.window == 0 {
        return Err(Error::Config("smoothing window must be >= 1".into()));
    }
    let t = dataset.target_start();
    let m = dataset.target_len();

    let mut fit = m;
    let mut smoothed = Vec::with_capacity(dataset.n_features());
    for (i, &delay) in dv.delays.iter().enumerate() {
        let series = moving_average(dataset.feature(i), dv.window)?;
        let available = series.len().saturating_sub(t + delay);
        if available == 0 {
            return Err(Error::AlignmentOverflow {
                series: dataset.feature_names()[i].clone(),
                delay,
                window: dv.window,
                series_len: dataset.series_len(),
                target_start: t,
            });
        }
        fit = fit.min(available);
        smoothed.push(series);
    }

    let columns: Vec<Vec<f64>> = smoothed
        .iter()
        .zip(&dv.delays)
        .map(|(series, &delay)| series[t + delay..t + delay + fit].to_vec())
        .collect();
    Ok(AlignedDataset::new(
        columns,
        dataset.target()[..fit].to_vec(),
    ))
}

/// Split a dataset into contiguous chronological partitions.
///
/// Every partition keeps the full feature matrix and carries its own target
/// start, so delayed lookups past a partition boundary stay valid. A zero
/// fraction yields an empty partition; a positive fraction that rounds to
/// zero rows is an error.
pub fn split(
    dataset: &TimeSeriesDataset,
    spec: &SplitSpec,
) -> Result<(TimeSeriesDataset, TimeSeriesDataset, TimeSeriesDataset)> {
    let m = dataset.target_len();
    let m_train = (spec.train * m as f64).round() as usize;
    let m_val = ((spec.validation * m as f64).round() as usize).min(m - m_train.min(m));
    let m_test = m - m_train - m_val;

    for (name, fraction, len) in [
        ("train", spec.train, m_train),
        ("validation", spec.validation, m_val),
        ("test", spec.test, m_test),
    ] {
        if fraction > 0.0 && len == 0 {
            return Err(Error::EmptyPartition { name, fraction });
        }
    }

    let t = dataset.target_start();
    let train = dataset.with_target_window(t, m_train)?;
    let validation = dataset.with_target_window(t + m_train, m_val)?;
    let test = dataset.with_target_window(t + m_train + m_val, m_test)?;
    Ok((train, validation, test))
}
