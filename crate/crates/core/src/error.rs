use thiserror::Error;

/// Errors raised anywhere in the estimation stack.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A matrix that must be positive definite is not.
    #[error("{what} is not positive definite (minimum eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { what: &'static str, min_eigenvalue: f64 },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("rank-deficient weighted normal equations")]
    RankDeficient,

    /// Truth simulation failed at a specific step.
    #[error("simulation failed at step {step} (t = {time:.4} s): {message}")]
    Simulation { step: usize, time: f64, message: String },

    #[error("power flow did not converge after {iterations} iterations (mismatch {mismatch:e})")]
    PowerFlow { iterations: usize, mismatch: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
