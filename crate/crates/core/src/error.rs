use alloc::boxed::Box;
use alloc::string::String;

use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("class {label} has {count} samples, fewer than the {folds} folds requested")]
    ClassSmallerThanFolds { label: i8, count: usize, folds: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("k = {k} must satisfy 1 <= k <= d = {d}")]
    BadTargetDim { k: usize, d: usize },

    #[error("projection columns are linearly dependent (singular value ratio {ratio:e})")]
    RankDeficient { ratio: f64 },

    #[error("matrix is not positive definite even after jitter")]
    NotPositiveDefinite,

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("y_true must contain both classes")]
    SingleClass,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("all {0} restarts failed")]
    AllRestartsFailed(usize),

    #[error("method {method} failed on fold {fold}: {source}")]
    MethodFailed {
        method: String,
        fold: usize,
        source: Box<Error>,
    },
}

pub type Result<T> = core::result::Result<T, Error>;
