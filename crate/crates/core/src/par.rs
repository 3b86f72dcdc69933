//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) [`Execution::Parallel`] runs on
//! the rayon pool; without it every call runs sequentially. Each output
//! element is computed independently, so both paths give identical
//! results.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether this build can actually run work in parallel.
    pub fn parallel_available() -> bool {
        cfg!(feature = "parallel")
    }
}

/// `(0..len).map(f).collect()`, in parallel when requested and available.
pub fn map_range<T, F>(len: usize, mode: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match mode {
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..len).into_par_iter().map(f).collect(),
        _ => (0..len).map(f).collect(),
    }
}

/// Work below this many multiply-adds stays on the calling thread.
const PARALLEL_THRESHOLD: usize = 1 << 16;

/// Picks parallel execution only when `work` is large enough to pay for it.
pub(crate) fn auto(work: usize) -> Execution {
    if work >= PARALLEL_THRESHOLD {
        Execution::Parallel
    } else {
        Execution::Sequential
    }
}
