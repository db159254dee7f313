//! Error type for the IO/CLI layer.

/// Failures of the toolkit's outer layer; estimator errors pass through.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] bbfi_core::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    /// CSV content violates the schema; the message names row and column.
    #[error("{0}")]
    Data(String),
    #[error("model file: {0}")]
    ModelFile(String),
    /// External predictor protocol violation; carries the child's stderr.
    #[error("external predictor: {0}")]
    Protocol(String),
    #[error("{0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, Error>;
