//! Data-parallel execution helpers with a sequential fallback.
//!
//! All hot loops (rendering, batched tensor math, per-factor statistics) go
//! through these helpers. With the `parallel` feature (default) they run on
//! the rayon pool; without it they compile to plain loops. Reductions are
//! always expressed as per-chunk partials folded in chunk order, so results
//! are bit-identical across thread counts and between the parallel and
//! sequential paths. The runtime switch exists so benches and equivalence
//! tests can compare both paths in one binary.

use std::sync::atomic::{AtomicBool, Ordering};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

static FORCE_SEQUENTIAL: AtomicBool = AtomicBool::new(false);

/// Forces the sequential path even when the `parallel` feature is enabled.
pub fn force_sequential(on: bool) {
    FORCE_SEQUENTIAL.store(on, Ordering::SeqCst);
}

/// True when work should run on the rayon pool.
pub fn parallel_enabled() -> bool {
    cfg!(feature = "parallel") && !FORCE_SEQUENTIAL.load(Ordering::SeqCst)
}

/// Configures the global thread pool size. No-op without the `parallel`
/// feature; later calls after the pool exists are ignored.
pub fn set_threads(n: usize) {
    #[cfg(feature = "parallel")]
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
}

/// Maps `f` over `0..n`, collecting results in index order.
pub fn indexed_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel_enabled() {
        return (0..n).into_par_iter().map(f).collect();
    }
    indexed_map_seq(n, f)
}

/// Sequential twin of [`indexed_map`]; always available for comparison.
pub fn indexed_map_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Splits `out` into chunks of `chunk_len` elements and applies
/// `f(chunk_index, chunk)` to each, collecting the per-chunk results in
/// chunk order. Chunk boundaries are fixed by `chunk_len`, not by the
/// thread count, so any reduction the caller performs over the returned
/// partials is deterministic.
pub fn process_chunks<T, E, F>(out: &mut [E], chunk_len: usize, f: F) -> Vec<T>
where
    T: Send,
    E: Send,
    F: Fn(usize, &mut [E]) -> T + Sync + Send,
{
    assert!(chunk_len > 0, "chunk_len must be positive");
    #[cfg(feature = "parallel")]
    if parallel_enabled() {
        return out
            .par_chunks_mut(chunk_len)
            .enumerate()
            .map(|(i, chunk)| f(i, chunk))
            .collect();
    }
    process_chunks_seq(out, chunk_len, f)
}

/// Sequential twin of [`process_chunks`].
pub fn process_chunks_seq<T, E, F>(out: &mut [E], chunk_len: usize, f: F) -> Vec<T>
where
    F: Fn(usize, &mut [E]) -> T,
{
    assert!(chunk_len > 0, "chunk_len must be positive");
    out.chunks_mut(chunk_len)
        .enumerate()
        .map(|(i, chunk)| f(i, chunk))
        .collect()
}

/// Maps `f` over the ranges `[i*chunk, min((i+1)*chunk, n))` covering
/// `0..n`, collecting per-range results in range order.
pub fn map_ranges<T, F>(n: usize, chunk: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(std::ops::Range<usize>) -> T + Sync + Send,
{
    let ranges = chunk_ranges(n, chunk);
    #[cfg(feature = "parallel")]
    if parallel_enabled() {
        return ranges.into_par_iter().map(f).collect();
    }
    ranges.into_iter().map(f).collect()
}

/// The fixed chunk decomposition of `0..n` used by [`map_ranges`].
pub fn chunk_ranges(n: usize, chunk: usize) -> Vec<std::ops::Range<usize>> {
    assert!(chunk > 0, "chunk must be positive");
    (0..n.div_ceil(chunk))
        .map(|i| i * chunk..((i + 1) * chunk).min(n))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree() {
        let a = indexed_map(100, |i| i * i);
        let b = indexed_map_seq(100, |i| i * i);
        assert_eq!(a, b);
    }

    #[test]
    fn chunk_ranges_cover_everything() {
        let ranges = chunk_ranges(10, 3);
        assert_eq!(ranges, vec![0..3, 3..6, 6..9, 9..10]);
    }

    #[test]
    fn process_chunks_partials_in_order() {
        let mut data = vec![1u64; 10];
        let partials = process_chunks(&mut data, 4, |i, chunk| (i, chunk.len()));
        assert_eq!(partials, vec![(0, 4), (1, 4), (2, 2)]);
    }
}
