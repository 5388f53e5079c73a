use thiserror::Error;

/// Errors raised by the bernsvm library.
#[derive(Debug, Error)]
pub enum BernError {
    #[error("smoothing parameter delta must be finite and positive, got {0}")]
    InvalidDelta(f64),

    #[error("invalid penalty: {0}")]
    InvalidPenalty(String),

    #[error("invalid solver options: {0}")]
    InvalidOptions(String),

    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("label at row {row} is {value}; labels must be -1 or +1")]
    InvalidLabel { row: usize, value: f64 },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("every feature column has zero variance; nothing to fit")]
    AllColumnsConstant,

    #[error("both classes must be present, found only {0}")]
    SingleClass(f64),

    #[error("csv error at row {row}, column {column}: {message}")]
    Csv {
        row: usize,
        column: String,
        message: String,
    },

    #[error("label column `{0}` not found in header")]
    MissingLabelColumn(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("cross-validation: {0}")]
    Folds(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, BernError>;
