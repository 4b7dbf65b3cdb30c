use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid family specification: {0}")]
    Spec(String),
    #[error("x = {x} is outside the available range [{lo}, {hi}]")]
    Range { x: f64, lo: f64, hi: f64 },
    #[error("step size underflow at x = {last_x} (last accepted state)")]
    StepFailure { last_x: f64 },
    #[error("coefficient set has no declared tail limits")]
    MissingTail,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("quadrature failed to reach tolerance on [{lo}, {hi}]")]
    Quadrature { lo: f64, hi: f64 },
    #[error("principal solution is not positive at x = {x} (u0 = {value})")]
    Positivity { x: f64, value: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
