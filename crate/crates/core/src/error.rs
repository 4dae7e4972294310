use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("series did not converge within {terms} terms")]
    NonConvergence { terms: usize },

    #[error("AR polynomial is not stationary (companion eigenvalue modulus {modulus:.6} >= 1)")]
    NonStationary { modulus: f64 },

    #[error("matrix of dimension {dim} is not positive definite")]
    NotPositiveDefinite { dim: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("bin {bin} has zero average power; log-average periodogram is undefined")]
    DegenerateBin { bin: usize },

    #[error("diagonal block of bin {bin} is singular")]
    SingularBlock { bin: usize },

    #[error("correlation trace {tau} for bins ({j}, {j_prime}) lies outside [0, 1]")]
    TraceOutOfRange { j: usize, j_prime: usize, tau: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
