//! Crate-wide error type.

use thiserror::Error;

/// Errors returned by this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or parameters (bad fractions, empty ranges, ...).
    #[error("config: {0}")]
    Config(String),

    /// Invalid or unusable data (malformed CSV, broken invariants, ...).
    #[error("data: {0}")]
    Data(String),

    /// A required column is missing from the input file.
    #[error("missing column '{0}'")]
    MissingColumn(String),

    /// A cell could not be parsed as a number.
    #[error("non-numeric value '{value}' in column '{column}', row {row}")]
    NonNumericCell {
        column: String,
        row: usize,
        value: String,
    },

    /// A delay pushes a shifted window past the end of a series.
    #[error(
        "alignment overflow on series '{series}': delay {delay} with window {window} \
         leaves no overlap (series length {series_len}, target start {target_start})"
    )]
    AlignmentOverflow {
        series: String,
        delay: usize,
        window: usize,
        series_len: usize,
        target_start: usize,
    },

    /// A split fraction produced an empty partition that must be non-empty.
    #[error("split fraction {fraction} for '{name}' produces an empty partition")]
    EmptyPartition { name: &'static str, fraction: f64 },

    /// Numerical failure during optimization or model fitting.
    #[error("numerical failure: {0}")]
    Numeric(String),

    /// The objective failed at a specific point during optimization.
    #[error("objective failed at {point:?}: {source}")]
    ObjectiveFailure {
        point: Vec<usize>,
        #[source]
        source: Box<Error>,
    },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("serialization: {0}")]
    Serialization(String),
}

impl Error {
    /// Process exit code for the CLI: 2 config, 3 data, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::EmptyPartition { .. } => 2,
            Error::Data(_)
            | Error::MissingColumn(_)
            | Error::NonNumericCell { .. }
            | Error::AlignmentOverflow { .. }
            | Error::Io(_)
            | Error::Csv(_)
            | Error::Serialization(_) => 3,
            Error::Numeric(_) => 4,
            Error::ObjectiveFailure { source, .. } => source.exit_code(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
