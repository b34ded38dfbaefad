use thiserror::Error;

use crate::model::PhaseState;

#[derive(Debug, Error)]
pub enum NopoError {
    #[error("invalid parameter `{field}`: {reason}")]
    Parameter { field: &'static str, reason: String },

    #[error("{what} is only defined for mu < 1 (got mu = {mu})")]
    Domain { what: &'static str, mu: f64 },

    #[error("critical scaling requires g > 0")]
    Scaling,

    #[error("non-finite state after {steps} steps")]
    IntegrationFault { steps: u64, last: Box<PhaseState> },

    #[error("{faulted} of {total} trajectories faulted (budget is 1%)")]
    FaultBudget { faulted: usize, total: usize },

    #[error("spectral estimation: {0}")]
    Estimation(String),

    #[error("contract violation: {0}")]
    Contract(String),
}

pub type Result<T> = std::result::Result<T, NopoError>;

pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> NopoError {
    NopoError::Parameter {
        field,
        reason: reason.into(),
    }
}
