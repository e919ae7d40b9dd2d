use thiserror::Error;

use crate::density::BasisKind;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("basis mismatch: expected {expected:?} table, found {found:?}")]
    BasisMismatch { expected: BasisKind, found: BasisKind },

    #[error("quadrature grid inadequate: {0}")]
    InadequateGrid(String),

    #[error("no candidate errors supplied")]
    EmptyCandidates,

    #[error("eigensolver failed to converge within {0} sweeps")]
    NoConvergence(usize),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
