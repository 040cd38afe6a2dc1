use thiserror::Error;

/// Errors raised by the PLC library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlcError {
    #[error("parameter outside the {family} domain: {message}")]
    ParameterDomain { family: &'static str, message: String },
    #[error("sample too small: need at least {min} observations, got {got}")]
    InsufficientSample { min: usize, got: usize },
    #[error("sample contains a non-finite value at index {index}")]
    NonFiniteValue { index: usize },
    #[error("degenerate sample: zero sample variance")]
    DegenerateSample,
    #[error("non-finite log-likelihood accumulation")]
    NumericOverflow,
    #[error("component collapse: effective weight {weight:e} below threshold")]
    ComponentCollapse { weight: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("quadrature failure: {0}")]
    Quadrature(String),
    #[error("limit theorem assumption violated: {0}")]
    AssumptionViolation(String),
    #[error("simulation integrity: {retries} of {reps} replications needed a retry")]
    SimulationIntegrity { retries: usize, reps: usize },
}

pub type Result<T> = std::result::Result<T, PlcError>;
