use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("non-finite state at step {step}")]
    Simulation { step: usize },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("subordinator path stayed below the positivity floor after {attempts} attempts")]
    Degenerate { attempts: u32 },

    #[error("{failed} of {total} paths failed, above the 0.1% budget")]
    FailureRate { failed: usize, total: usize },

    #[error("estimate of P_T f is {0}, cannot take its logarithm")]
    NonPositiveMean(f64),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}
