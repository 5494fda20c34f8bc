use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("row count mismatch: features have {features} rows, labels have {labels}")]
    RowCountMismatch { features: usize, labels: usize },

    #[error("label row {0} has no positive entry")]
    AllZeroLabelRow(usize),

    #[error("non-finite entry at ({row}, {col})")]
    NonFiniteEntry { row: usize, col: usize },

    #[error("logical label at ({row}, {col}) is not 0 or 1")]
    NonBinaryLabel { row: usize, col: usize },

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch { left: (usize, usize), right: (usize, usize) },

    #[error("row {row} is not a distribution (sum {sum})")]
    NotADistribution { row: usize, sum: f64 },

    #[error("entry ({row}, {col}) exceeds its logical label")]
    DominanceViolation { row: usize, col: usize },

    #[error("k = {k} must be smaller than the sample count {n}")]
    KTooLarge { k: usize, n: usize },

    #[error("RBF bandwidth must be positive")]
    SigmaNonPositive,

    #[error("similarity matrix is not symmetric (max asymmetry {0})")]
    NotSymmetric(f64),

    #[error("prediction at ({row}, {col}) is not positive")]
    NonPositivePrediction { row: usize, col: usize },

    #[error("negative label degree at ({row}, {col})")]
    NegativeD { row: usize, col: usize },

    #[error("capped simplex is empty{}", match .row { Some(r) => format!(" for row {r}"), None => String::new() })]
    InfeasibleCap { row: Option<usize> },

    #[error("invalid hyperparameter: {0}")]
    InvalidParam(String),

    #[error("empty input")]
    EmptyInput,
}
