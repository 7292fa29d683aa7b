//! Thin indirection over rayon so every data-parallel loop in the crate has a
//! sequential twin. With the `parallel` feature (default) the `par_*` helpers
//! dispatch to rayon; without it they alias the sequential versions. The
//! sequential versions are always available so benchmarks can compare both.

/// Sequential map over an index range.
pub fn map_indexed_seq<T, F>(count: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T + Sync + Send,
    T: Send,
{
    (0..count).map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(count: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T + Sync + Send,
    T: Send,
{
    use rayon::prelude::*;
    (0..count).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(count: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T + Sync + Send,
    T: Send,
{
    map_indexed_seq(count, f)
}

/// Sequential sum of a per-index contribution.
pub fn sum_indexed_seq<F>(count: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    (0..count).map(f).sum()
}

/// Parallel evaluation with a sequential reduction, so the floating-point
/// result is independent of worker count.
#[cfg(feature = "parallel")]
pub fn sum_indexed<F>(count: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    map_indexed(count, f).into_iter().sum()
}

#[cfg(not(feature = "parallel"))]
pub fn sum_indexed<F>(count: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    sum_indexed_seq(count, f)
}

/// Number of events among `count` trials. Deterministic regardless of worker
/// count because each trial depends only on its own index.
pub fn count_indexed_seq<F>(count: usize, f: F) -> usize
where
    F: Fn(usize) -> bool + Sync + Send,
{
    (0..count).filter(|&i| f(i)).count()
}

#[cfg(feature = "parallel")]
pub fn count_indexed<F>(count: usize, f: F) -> usize
where
    F: Fn(usize) -> bool + Sync + Send,
{
    use rayon::prelude::*;
    (0..count).into_par_iter().filter(|&i| f(i)).count()
}

#[cfg(not(feature = "parallel"))]
pub fn count_indexed<F>(count: usize, f: F) -> usize
where
    F: Fn(usize) -> bool + Sync + Send,
{
    count_indexed_seq(count, f)
}

/// Configure the global worker pool. A no-op without the `parallel` feature or
/// if the pool was already initialised.
pub fn set_workers(workers: usize) {
    #[cfg(feature = "parallel")]
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global();
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
    }
}
