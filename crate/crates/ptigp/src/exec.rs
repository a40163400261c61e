//! Execution strategy: data-parallel map with a sequential fallback.
//!
//! With the `parallel` feature (default) `par_map` fans out across the rayon
//! thread pool; without it the same call compiles to a plain iterator, so all
//! numeric code is strategy-agnostic. `seq_map` is always sequential and
//! exists so benchmarks can compare both strategies in one build.

/// Maps `f` over `items`, in parallel when the `parallel` feature is enabled.
#[cfg(feature = "parallel")]
pub fn par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Send + Sync,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

/// Maps `f` over `items` sequentially (the `parallel` feature is disabled).
#[cfg(not(feature = "parallel"))]
pub fn par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Send + Sync,
{
    items.iter().map(f).collect()
}

/// Always-sequential map, for baseline comparisons.
pub fn seq_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}
