use thiserror::Error;

/// Errors raised by the numerical routines and the experiment harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A scalar field returned a non-finite value.
    #[error("non-finite evaluation at step mu = {mu:e}")]
    Evaluation { mu: f64 },

    /// Every parameter of a marginal family was rejected by its singular guard.
    #[error("all parameters rejected by the singular guard at x = {x:?}")]
    GuardedDomain { x: Vec<f64> },

    /// The integrator produced a non-finite or runaway state.
    #[error("integration blow-up at t = {t}")]
    BlowUp { t: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
