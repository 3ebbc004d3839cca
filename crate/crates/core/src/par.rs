//! Index-parallel map used for independent replications.
//!
//! Results are always returned in index order, so any reduction performed by
//! the caller is independent of scheduling.

/// Maps `f` over `0..n` sequentially.
pub fn map_indexed_sequential<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Maps `f` over `0..n` on the rayon pool.
#[cfg(feature = "parallel")]
pub fn map_indexed_parallel<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

/// Parallel when the `parallel` feature is enabled, sequential otherwise.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        map_indexed_parallel(n, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_indexed_sequential(n, f)
    }
}

/// True when replications fan out over threads.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
