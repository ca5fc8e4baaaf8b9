//! Crate-wide error type.

/// Errors produced anywhere in the synthesis pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("degree overflow in constraint `{constraint}`: term {term} of degree {degree} exceeds Gram capacity {capacity}")]
    DegreeOverflow {
        constraint: String,
        term: String,
        degree: usize,
        capacity: usize,
    },

    /// The SDP solver proved the SOS program infeasible at the chosen degrees.
    #[error("no certificate at these degrees: {0}")]
    Infeasible(String),

    #[error("problem is unbounded: {0}")]
    Unbounded(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("certificate verification failed: {0}")]
    CertificateFailure(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
