use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not positive definite (smallest eigenvalue {min_eig:e})")]
    NotPositiveDefinite { min_eig: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("channel matrix {which} is numerically singular")]
    SingularChannel { which: &'static str },

    #[error("fixed-point iteration stalled after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("equation has no positive definite solution (numerical radius {radius})")]
    NotSolvable { radius: f64 },

    #[error("operation requires regime {expected}, channel is {actual}")]
    WrongRegime { expected: String, actual: String },

    #[error("channel was not built from per-subchannel gains")]
    NotParallel,

    #[error("restarts of a concave problem disagree (spread {spread:e}, tolerance {tolerance:e})")]
    NonConcaveAgreementFailure { spread: f64, tolerance: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
