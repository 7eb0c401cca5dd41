use thiserror::Error;

/// Errors raised by the model, solver, oracle and sampler layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MrfError {
    #[error("invalid theta vector: {0}")]
    InvalidTheta(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("expected a vector of length {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("unknown distribution family `{0}`")]
    UnknownFamily(String),

    #[error("unsupported boundary condition `{0}`")]
    UnsupportedBoundary(String),

    #[error("value {value} lies outside the range [{lo}, {hi}] of the map")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("derivative vanishes ({0:e}); quantity is degenerate at this point")]
    DegenerateSlope(f64),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("enumeration budget exceeded: {free} free nodes (limit {limit})")]
    BudgetExceeded { free: usize, limit: usize },

    #[error("graph generation failed after {attempts} attempts")]
    GenerationFailed { attempts: usize },

    #[error("parse error: {0}")]
    Parse(String),
}

impl MrfError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        MrfError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, MrfError>;
