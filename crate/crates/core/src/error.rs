//! Crate-wide error type.

use core::fmt;

/// Errors surfaced by the core algorithms.
#[derive(Debug, Clone, PartialEq)]
pub enum CoreError {
    /// A vector or matrix argument has the wrong length.
    DimMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    /// An input contained NaN or infinity.
    NonFinite { what: &'static str },
    /// A configuration value is outside its legal range.
    InvalidConfig { what: &'static str },
    /// A loss turned non-finite during training (divergence signal).
    NonFiniteLoss { episode: usize, what: &'static str },
    /// An SGD trace exceeded the divergence guard.
    Diverged { iteration: usize },
}

pub type Result<T> = core::result::Result<T, CoreError>;

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::DimMismatch {
                what,
                expected,
                got,
            } => write!(f, "dimension mismatch in {what}: expected {expected}, got {got}"),
            CoreError::NonFinite { what } => write!(f, "non-finite value in {what}"),
            CoreError::InvalidConfig { what } => write!(f, "invalid configuration: {what}"),
            CoreError::NonFiniteLoss { episode, what } => {
                write!(f, "training diverged: non-finite {what} at episode {episode}")
            }
            CoreError::Diverged { iteration } => {
                write!(f, "sgd trace diverged at iteration {iteration}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for CoreError {}
