//! Batch execution over independent work items.
//!
//! With the `parallel` feature (default) batches fan out over the rayon pool;
//! without it, or through the `*_seq` entry points, they run in order on the
//! calling thread. Both paths return results in item order, so callers see
//! identical output either way.

/// Maps `f` over `0..n` in item order on the current thread.
pub fn map_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Maps `f` over `0..n`, in parallel when the `parallel` feature is enabled.
#[cfg(feature = "parallel")]
pub fn map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_seq(n, f)
}

/// Whether [`map`] fans out over worker threads in this build.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
