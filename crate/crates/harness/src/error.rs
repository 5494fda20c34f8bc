use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] dldl::Error),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("line {line}: distribution sums to {sum}")]
    RowSumViolation { line: usize, sum: f64 },

    #[error("line {line}: no positive logical label")]
    AllZeroLabelRow { line: usize },

    #[error("row {0}: every degree is at or below the threshold")]
    AllZeroAfterThreshold(usize),

    #[error("header mismatch: {0}")]
    HeaderMismatch(String),

    #[error("need at least 5 samples to split, got {0}")]
    TooFewSamples(usize),

    #[error("could not draw a non-degenerate row for sample {0}")]
    DegenerateRow(usize),

    #[error("dataset `{0}` has no ground-truth distributions")]
    MissingGroundTruth(String),

    #[error("dataset `{0}` has no logical labels")]
    MissingLabels(String),

    #[error("every grid cell failed; first error: {0}")]
    AllCellsFailed(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("report format: {0}")]
    Format(String),
}

impl HarnessError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.into(), source }
    }
}
