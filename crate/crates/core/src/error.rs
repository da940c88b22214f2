use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("row {row}: {reason}")]
    BadRow { row: usize, reason: String },

    #[error("gap of {missing} missing samples after row {row} exceeds max_gap {max_gap}")]
    GapTooLong {
        row: usize,
        missing: u64,
        max_gap: usize,
    },

    #[error("no valid rows in input")]
    NoValidRows,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient data: need {needed} samples, have {available}")]
    InsufficientData { needed: usize, available: usize },

    #[error("series has zero variance")]
    ZeroVariance,

    #[error("series is degenerate (min = max)")]
    DegenerateSeries,

    #[error("window length {got} does not match model embedding length {expected}")]
    WindowLength { expected: usize, got: usize },

    #[error("non-finite value in input window at position {0}")]
    NonFinite(usize),

    #[error("model was trained without bootstrap; out-of-bag error is undefined")]
    NoBootstrap,

    #[error("no row is out-of-bag for any tree")]
    NoOutOfBagRows,

    #[error("dataset does not match the model's training data ({0})")]
    DatasetMismatch(String),

    #[error("model file format version {found} is not supported (expected {expected})")]
    FormatVersion { found: u64, expected: u64 },

    #[error("corrupted model file: {0}")]
    CorruptModel(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
