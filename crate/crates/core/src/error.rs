use thiserror::Error;

/// Errors raised anywhere in the solver stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("capability exceeded: {0}")]
    Capability(String),

    #[error("non-finite integrand value at x = {node}")]
    Integration { node: f64 },

    #[error("banded system is numerically singular at pivot row {row}")]
    Singular { row: usize },

    #[error("Crank-Nicolson system singular at t = {t}, dt = {dt}")]
    Solver { t: f64, dt: f64 },

    #[error("division by zero: {0}")]
    DivisionByZero(String),

    #[error("solution diverged at step {step} (t = {t})")]
    Divergence { step: usize, t: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
