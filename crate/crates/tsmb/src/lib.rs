//! Predictive modeling for multivariate time series whose feature series lag
//! the target by unknown, possibly stochastic, delays.
//!
//! The core estimator resamples the training window with a moving-block
//! bootstrap, re-estimates the per-series delays on every resample by
//! maximizing a score function (absolute cross-correlation or k-NN mutual
//! information) with the DIRECT global optimizer, trains one base model per
//! resample on the training data aligned at that resample's delays, and
//! predicts with the member mean. The member spread doubles as an empirical
//! delay distribution and yields percentile prediction intervals.

pub mod bootstrap;
pub mod config;
pub mod dataset;
pub mod ensemble;
pub mod error;
pub mod evaluation;
pub mod injection;
pub mod learners;
pub mod optimizer;
pub mod runner;
pub mod scores;

pub use dataset::{
    align, load_csv, moving_average, split, AlignedDataset, DelayVector, SplitSpec, TaskKind,
    TimeSeriesDataset,
};
pub use error::{Error, Result};
