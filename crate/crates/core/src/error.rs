use thiserror::Error;

/// Errors raised by simulation, spectral and verification routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("model coefficients are not finite at point {point:?}")]
    ModelEvaluation { point: Vec<f64> },

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("path not absorbed within {max_steps} steps")]
    RunawayPath { max_steps: u64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid sub-generator: {0}")]
    InvalidChain(String),

    #[error("chain restricted to the transient states is reducible; the quasi-stationary distribution need not be unique")]
    Reducible,

    #[error("-Q is singular: absorption is not certain")]
    NoAbsorption,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("survival probability underflowed at t = {t}")]
    Horizon { t: f64 },

    #[error("adaptive step size underflowed at t = {t}")]
    Stiffness { t: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Error {
    Error::Parameter {
        name,
        reason: reason.into(),
    }
}
