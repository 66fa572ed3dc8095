use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("negative input component {index}: {value}")]
    NegativeInput { index: usize, value: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid cost function: {0}")]
    InvalidCost(String),

    #[error("invalid surrogate: {0}")]
    InvalidSurrogate(String),

    #[error("invalid valuation: {0}")]
    InvalidValuation(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("conjugate is infinite at lambda = {lambda:?}")]
    ConjugateInfinite { lambda: Vec<f64> },

    #[error("no convergence within {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("degree {degree} is below the required minimum of 2")]
    DegreeTooSmall { degree: f64 },

    #[error("grid enumeration of {count:e} points exceeds the cap of {cap}")]
    EnumerationCap { count: f64, cap: u64 },

    #[error(
        "alpha_upper = {alpha_upper} is infeasible (max violation {violation:e}); retry with a larger alpha_upper"
    )]
    AlphaUpperInfeasible { alpha_upper: f64, violation: f64 },

    #[error("step {step}: {source}")]
    Step { step: usize, source: Box<Error> },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("json error: {0}")]
    Json(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    pub(crate) fn at_step(self, step: usize) -> Self {
        Error::Step {
            step,
            source: Box::new(self),
        }
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

pub(crate) fn check_nonnegative(v: &[f64]) -> Result<()> {
    for (index, &value) in v.iter().enumerate() {
        if !(value >= 0.0) || !value.is_finite() {
            return Err(Error::NegativeInput { index, value });
        }
    }
    Ok(())
}
