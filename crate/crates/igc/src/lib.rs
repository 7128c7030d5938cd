//! Implicit generative copulas.
//!
//! Trains a small fully-connected generator network so that the rank
//! structure (copula) of its output matches that of multivariate training
//! data, then samples from the learned copula with uniform marginals by
//! construction. The crate also ships ground-truth copula samplers, a
//! Gaussian-copula baseline, and the distribution distances used to score
//! copula fits (energy distance, ISE on empirical copulas, Gaussian-kernel
//! MMD, Kendall's tau, KS uniformity, KDE log-likelihood).

pub mod baselines;
pub mod matrix;
pub mod metrics;
pub mod mlp;
pub mod model;
pub mod rng;
pub mod special;
pub mod synth;
pub mod transforms;

pub use matrix::Matrix;
pub use model::{TrainConfig, TrainedCopulaModel};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("stale forward cache: parameters changed since the forward pass")]
    StaleCache,
    #[error("training diverged at epoch {epoch}, batch {batch}: {detail}")]
    TrainingDiverged {
        epoch: usize,
        batch: usize,
        detail: String,
    },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("model archive: {0}")]
    Archive(String),
}

pub type Result<T> = std::result::Result<T, Error>;
