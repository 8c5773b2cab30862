use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A required column is missing or the header does not match the schema.
    #[error("schema error: {0}")]
    Schema(String),
    /// A cell failed to parse as a finite number (1-based data row).
    #[error("parse error at data row {row}: {msg}")]
    Parse { row: usize, msg: String },
    /// Input violates a mathematical precondition (e.g. log of a non-positive value).
    #[error("domain error: {0}")]
    Domain(String),
    /// Dimension mismatch between tables, forests or vectors.
    #[error("shape error: {0}")]
    Shape(String),
    /// Requested sample or split sizes exceed what is available.
    #[error("size error: {0}")]
    Size(String),
    /// Invalid configuration (bad bin tiling, B too small, budget exceeded, ...).
    #[error("config error: {0}")]
    Config(String),
    /// Classifier training failed (empty class, ...).
    #[error("training error: {0}")]
    Training(String),
    /// An iterative fit failed to converge or produced non-finite values.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// The asymptotic test cannot be carried out (degenerate scores).
    #[error("inconclusive test: {0}")]
    Inconclusive(String),
    /// Invalid data reaching an operation (non-finite gradients, empty input, ...).
    #[error("data error: {0}")]
    Data(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
