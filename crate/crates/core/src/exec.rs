//! Execution strategy for grid sweeps and Monte Carlo chunks.
//!
//! Work is always split into the same index-addressed units, so results do
//! not depend on the strategy or the thread count.

/// How independent work items are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    /// Evaluate on the calling thread, in index order.
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
    /// Evaluate on the rayon global pool.
    #[cfg(feature = "parallel")]
    #[default]
    Parallel,
}

/// Evaluates `f(0..n)` and returns the results in index order.
pub(crate) fn map_indexed<T, F>(n: usize, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        Execution::Sequential => (0..n).map(f).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
    }
}
