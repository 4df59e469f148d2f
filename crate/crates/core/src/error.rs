//! Error type shared by every module of the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IcaError {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("insufficient data: need at least {needed} rows, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error(
        "degenerate direction: empirical characteristic function modulus {modulus:e} below floor"
    )]
    DegenerateDirection { modulus: f64 },

    #[error("cumulant generating function overflowed")]
    Overflow,

    #[error("gradient norm {norm:e} too small to normalize")]
    DegenerateGradient { norm: f64 },

    #[error("quasi-orthogonalization failed: {0}")]
    EstimationFailure(String),

    #[error("matrix is rank deficient (rank {rank} of {dim})")]
    RankDeficient { rank: usize, dim: usize },

    #[error("too many failed probes: {failed} of {total}")]
    ProbeFailure { failed: usize, total: usize },

    #[error("every candidate failed: {0}")]
    MetaFailure(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("csv error: {0}")]
    Csv(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, IcaError>;
