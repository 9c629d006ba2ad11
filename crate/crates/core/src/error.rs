//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("SVD did not converge within {0} sweeps")]
    NoConvergence(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("graph generation exhausted {0} attempts without a valid sample")]
    GenerationExhausted(usize),

    #[error("class {0} has no one-hot exemplars")]
    EmptyClass(usize),

    #[error("a split contains only one class")]
    SingleClass,

    #[error("concept {0} is not defined for this dataset family")]
    WrongDataset(String),

    #[error("zero row at index {0}")]
    ZeroRow(usize),

    #[error("metric undefined: {0}")]
    Undefined(String),

    #[error("checkpoint format error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(String),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
