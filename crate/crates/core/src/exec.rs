//! Pluggable execution of independent indexed jobs (restarts, grid points).
//!
//! The core only ships [`Sequential`]; the `melm` crate provides a thread-pool
//! executor. Results are always returned in index order, so reductions over
//! them are independent of how jobs were scheduled.

use alloc::vec::Vec;

pub trait Executor: Sync {
    /// Evaluate `job(0..n)` and return the results ordered by index.
    fn map_indexed<T, F>(&self, n: usize, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs every job on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map_indexed<T, F>(&self, n: usize, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(job).collect()
    }
}
