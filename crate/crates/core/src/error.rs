use thiserror::Error;

/// Errors produced by the analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("matrix is not positive definite (smallest eigenvalue {lambda_min:e})")]
    NotPositiveDefinite { lambda_min: f64 },

    #[error("matrix is not positive semidefinite (smallest eigenvalue {lambda_min:e})")]
    NotPsd { lambda_min: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("combination is not positive definite (smallest eigenvalue {lambda_min:e})")]
    NotDefiniteDirection { lambda_min: f64 },

    #[error("direction is parallel to the positive-definite direction")]
    DegenerateDirection,

    #[error("unsupported domain: {0}")]
    UnsupportedDomain(String),

    #[error("malformed JSON at line {line}, column {column}: {message}")]
    MalformedJson { line: usize, column: usize, message: String },

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
