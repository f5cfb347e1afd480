use thiserror::Error;

use crate::spin_model::Basis;

/// Errors produced by simulation and analysis entry points.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {message}")]
    InvalidParameter {
        field: &'static str,
        message: String,
    },

    #[error("state vector norm deviates from 1 by {deviation:e}")]
    NotNormalized { deviation: f64 },

    #[error("operator dimension {operator} does not match state dimension {state}")]
    DimensionMismatch { operator: usize, state: usize },

    #[error("state is in the {found:?} basis, expected {expected:?}")]
    BasisMismatch { expected: Basis, found: Basis },

    #[error("invalid time grid: {0}")]
    InvalidTimeGrid(String),

    #[error("eigensolver failed to converge at index {index}")]
    NoConvergence { index: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
