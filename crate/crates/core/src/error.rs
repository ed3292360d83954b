use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("lambda = {lambda} lies within the pole tolerance of the pole at {pole}")]
    PoleProximity { lambda: f64, pole: f64 },

    #[error("not a valid Herglotz-Nevanlinna function: {0}")]
    NotHerglotz(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("ODE integration failed at x = {x} (lambda = {lambda}): {reason}")]
    IntegrationFailure { x: f64, lambda: f64, reason: String },

    #[error("eigenvalue bracketing failed: {0}")]
    BracketingFailure(String),

    #[error("lambda = {lambda} is not an eigenvalue (Newton correction {correction:e})")]
    NotAnEigenvalue { lambda: f64, correction: f64 },

    #[error("norming constant at lambda = {lambda} is not positive ({gamma})")]
    NonPositiveNorming { lambda: f64, gamma: f64 },

    #[error("both phi(0) and phi'(0) vanish at lambda = {0}")]
    DegenerateEigenfunction(f64),

    #[error("index {index} out of range (valid: {valid})")]
    IndexOutOfRange { index: i64, valid: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("Hankel subsystem is not positive definite (order {order})")]
    NotPositiveDefinite { order: usize },

    #[error("identity system is singular (|det| = {det:e})")]
    SingularSystem { det: f64 },

    #[error(
        "Newton iteration did not converge after {iterations} iterations (residual {residual:e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("underdetermined: {unknowns} unknowns but only {equations} equations")]
    UnderdeterminedProblem { unknowns: usize, equations: usize },
}
