//! Data-parallel map with a sequential fallback.
//!
//! Every reduction in this crate collects per-item results into an
//! index-ordered vector and folds it sequentially afterwards, so outputs are
//! bit-identical whether the map ran on one thread or many. Parallelism is a
//! compile-time feature (`parallel`, on by default) plus a runtime switch,
//! which lets one binary benchmark both paths against each other.

use std::sync::atomic::{AtomicBool, Ordering};

static PARALLEL: AtomicBool = AtomicBool::new(true);

/// Enables or disables the rayon path at runtime. No-op when the crate was
/// built without the `parallel` feature.
pub fn set_parallel(enabled: bool) {
    PARALLEL.store(enabled, Ordering::Relaxed);
}

/// Whether maps currently run on the rayon pool.
pub fn parallel_enabled() -> bool {
    cfg!(feature = "parallel") && PARALLEL.load(Ordering::Relaxed)
}

/// Maps `f` over `0..n` preserving index order in the output.
pub fn map_range<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if PARALLEL.load(Ordering::Relaxed) {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    (0..n).map(f).collect()
}

/// Fallible [`map_range`]. All items are evaluated; the error at the lowest
/// index wins, so the reported failure does not depend on scheduling.
pub fn try_map_range<U, F>(n: usize, f: F) -> crate::Result<Vec<U>>
where
    U: Send,
    F: Fn(usize) -> crate::Result<U> + Sync + Send,
{
    let results = map_range(n, f);
    let mut out = Vec::with_capacity(results.len());
    for r in results {
        out.push(r?);
    }
    Ok(out)
}
