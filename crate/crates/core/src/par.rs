//! Deterministic data parallelism.
//!
//! Every floating-point reduction in this crate goes through the helpers
//! here: parallel stages only ever produce per-item values in index order,
//! and the actual accumulation is a fixed-shape pairwise tree. The result is
//! therefore bit-identical for any thread count, including the sequential
//! fallback compiled when the `parallel` feature is off.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `0..n` to a vector in index order, in parallel when available.
pub fn map_indexed<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Sequential twin of [`map_indexed`], kept for benchmarks comparing the two.
pub fn map_indexed_seq<U, F>(n: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..n).map(f).collect()
}

/// Process disjoint chunks of `data` in place. `f` receives the chunk index.
pub fn for_each_chunk_mut<T, F>(data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        data.par_chunks_mut(chunk)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
    }
    #[cfg(not(feature = "parallel"))]
    {
        data.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
    }
}

/// Fixed-shape pairwise summation. Deterministic and O(log n) error growth.
pub fn sum_pairwise(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1..=8 => xs.iter().sum(),
        n => {
            let mid = n / 2;
            sum_pairwise(&xs[..mid]) + sum_pairwise(&xs[mid..])
        }
    }
}

/// Parallel sum of `g(i)` over `0..n` rows, each row reduced sequentially by
/// `g`, rows combined pairwise. Deterministic for any thread count.
pub fn sum_rows<F>(rows: usize, g: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let partials = map_indexed(rows, g);
    sum_pairwise(&partials)
}

/// Run `f` under a rayon pool with exactly `threads` workers. With the
/// `parallel` feature off this just calls `f`.
pub fn with_thread_cap<R, F>(threads: usize, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("failed to build thread pool")
            .install(f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        f()
    }
}

/// Thread cap requested via `MU_REARRANGE_THREADS` (unset or 0 = all cores).
pub fn env_thread_cap() -> Option<usize> {
    std::env::var("MU_REARRANGE_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}
