use thiserror::Error;

/// Errors raised by the logband library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid reward {0}: rewards must be 0 or 1")]
    InvalidReward(u8),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("rank-one weight must be nonnegative, got {0}")]
    NegativeWeight(f64),

    #[error("matrix is not symmetric positive definite")]
    NotPositiveDefinite,

    #[error("{what} did not converge within {iterations} iterations")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
    },

    #[error("arm set is empty")]
    EmptyArmSet,

    #[error("constraint set is empty: {0}")]
    EmptyConstraint(String),

    #[error("rejection sampling exceeded {0} draws")]
    RejectionCap(usize),

    #[error("arm does not belong to the current arm set")]
    ForeignArm,

    #[error("round index must be at least 1, got {0}")]
    InvalidRound(usize),

    #[error("configuration error in `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
