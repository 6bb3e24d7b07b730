use alloc::string::String;

use crate::spaces::SpaceId;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("space mismatch: expected `{expected}`, found `{found}`")]
    SpaceMismatch { expected: SpaceId, found: SpaceId },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("metric is not Hermitian (relative asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("metric is not positive definite")]
    NotPositiveDefinite,

    #[error("`{0}` is singular")]
    Singular(String),

    #[error("`{name}` is ill-conditioned: condition estimate {cond:e} exceeds {limit:e}")]
    IllConditioned { name: String, cond: f64, limit: f64 },

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error("point lies outside chart `{0}`")]
    OutsideChart(String),

    #[error("derivative is singular at {0}")]
    SingularDerivative(String),
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn ensure_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
