//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (on by default) [`Parallelism::Parallel`] fans
//! work out over the rayon global pool. Without it every call runs on the
//! calling thread, so results never depend on the feature set: each helper
//! preserves input order in its output.

/// How a batch of independent work items is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parallelism {
    Sequential,
    #[default]
    Parallel,
}

impl Parallelism {
    /// True when work will actually be spread over threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Parallelism::Parallel
    }
}

/// Maps `f` over `items`, keeping input order.
pub fn map<T, U, F>(items: &[T], par: Parallelism, f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if par.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = par;
    items.iter().map(f).collect()
}

/// Maps `f` over `0..n`, keeping index order.
pub fn map_range<U, F>(n: usize, par: Parallelism, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if par.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = par;
    (0..n).map(f).collect()
}
