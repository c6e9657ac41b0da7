use thiserror::Error;

/// Errors raised by the solver, the analytic oracles and the experiment harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("time step must be positive and finite, got {0}")]
    NonPositiveStep(f64),

    #[error("index {index} out of range for `{what}` (length {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("length mismatch for `{what}`: expected {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("pivot magnitude {value:e} at row {row} is below the solver threshold")]
    SingularPivot { row: usize, value: f64 },

    #[error("{what} did not converge after {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },

    #[error("step ceiling of {0} steps exceeded")]
    StepCeiling(usize),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
