use thiserror::Error;

/// Errors produced by this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid label image: {0}")]
    InvalidLabel(String),

    #[error("invalid scale: {0}")]
    InvalidScale(String),

    #[error("target pixel ({row}, {col}) outside output extent {height}x{width}")]
    TargetOutOfRange {
        row: usize,
        col: usize,
        height: usize,
        width: usize,
    },

    #[error("kernel kind mismatch: expected {expected}, got {found}")]
    KernelKindMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("inconsistent inputs: {0}")]
    Inconsistent(String),

    #[error("region out of bounds: {0}")]
    RegionOutOfBounds(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid probability map: {0}")]
    InvalidProbabilities(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("malformed container: {0}")]
    Format(String),

    #[error("invalid pixel ({row}, {col}): {message}")]
    Validation {
        row: usize,
        col: usize,
        message: String,
    },

    #[error("class id map: {0}")]
    ClassIdMap(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
