//! Parallel, order-independent trial dispatch.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::trial_seed;

/// Runs `trial(index, seed)` for every index and returns the results in index
/// order. The seed of each trial depends only on `(master, index)`, so the
/// output is identical for any number of worker threads.
pub fn run_trials<T, F>(trials: usize, master: u64, trial: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, u64) -> T + Sync,
{
    (0..trials as u64)
        .into_par_iter()
        .map(|i| trial(i, trial_seed(master, i)))
        .collect()
}

/// Runs `f` inside a dedicated pool of `threads` workers (0 = rayon default).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}
