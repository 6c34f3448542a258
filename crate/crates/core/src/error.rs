use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("alpha out of (0,1): {0}")]
    AlphaOutOfRange(f64),

    #[error("horizon must be positive, got {0}")]
    NonPositiveHorizon(f64),

    #[error("path is not continuous")]
    NotContinuous,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    /// A checked mathematical invariant failed: a bug, not bad input.
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Whether the error is caused by the caller's input (as opposed to a bug or the environment).
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Invariant(_) | Error::Io(_))
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::AlphaOutOfRange(alpha))
    }
}

pub(crate) fn check_horizon(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveHorizon(t))
    }
}
