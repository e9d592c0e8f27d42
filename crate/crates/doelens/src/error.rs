use thiserror::Error;

/// Error type shared across the pipeline stages.
#[derive(Debug, Error)]
pub enum DoeError {
    #[error("invalid factor space: {0}")]
    InvalidFactorSpace(String),

    #[error("index out of range: {what} = {index}, limit {limit}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        limit: usize,
    },

    #[error("invalid design generator: {0}")]
    InvalidGenerator(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("setting pool exhausted: {0}")]
    PoolExhausted(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, DoeError>;
