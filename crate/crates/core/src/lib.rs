//! Noisy independent component analysis: synthetic mixtures, pseudo-Euclidean
//! power iteration with several contrast functions, an independence score
//! that is insensitive to additive Gaussian noise, and score-based selection
//! among candidate demixing algorithms.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod contrast;
pub mod error;
pub mod experiments;
pub mod extract;
pub mod io;
pub mod linalg;
pub mod meta;
pub mod metrics;
pub mod rng;
pub mod score;
pub mod synth;

pub use error::{IcaError, Result};
