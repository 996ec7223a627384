//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("tensor space too large: total dimension {dim} exceeds {max}")]
    SpaceTooLarge { dim: u128, max: u64 },

    #[error("tensor power {factors} exceeds the supported limit {max}")]
    FactorLimit { factors: usize, max: usize },

    #[error("invalid permutation: images must be a bijection on 0..{degree}")]
    InvalidPermutation { degree: usize },

    #[error("matrix is not positive semidefinite: min eigenvalue {min_eig:e}")]
    NotPsd { min_eig: f64 },

    #[error("channel is not trace preserving: defect {defect:e}")]
    NotTracePreserving { defect: f64 },

    #[error("matrix is not an isometry: defect {defect:e}")]
    NotIsometry { defect: f64 },

    #[error("vector is not normalized: | ||v|| - 1 | = {defect:e}")]
    NotUnitVector { defect: f64 },

    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("unsupported p->p norm \"{0}\": only 1, 2 and inf are available")]
    UnsupportedNorm(String),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
