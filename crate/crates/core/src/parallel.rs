//! Deterministic fan-out of Monte Carlo work over the rayon pool.
//!
//! Work is split into fixed chunks, each driven by its own forked stream, so
//! results depend only on the root stream and never on the number of workers.

use rayon::prelude::*;

use crate::rng::RandomStream;

const CHUNK: usize = 1024;

/// `count` draws of `f`, in a fixed order.
pub fn par_draws<T, F>(stream: &RandomStream, lane: u64, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut RandomStream) -> T + Sync,
{
    let chunks = count.div_ceil(CHUNK);
    let nested: Vec<Vec<T>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut s = stream.fork(lane, c as u64);
            let len = CHUNK.min(count - c * CHUNK);
            (0..len).map(|_| f(&mut s)).collect()
        })
        .collect();
    nested.into_iter().flatten().collect()
}

/// One call of `f` per path index, each with its own stream.
pub fn par_paths<T, F>(stream: &RandomStream, lane: u64, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut RandomStream) -> T + Sync,
{
    par_paths_from(stream, lane, 0, count, f)
}

/// Paths `first..first + count`; consecutive batches concatenate to the
/// same draws as one larger call.
pub fn par_paths_from<T, F>(stream: &RandomStream, lane: u64, first: u64, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut RandomStream) -> T + Sync,
{
    (first..first + count as u64)
        .into_par_iter()
        .map(|i| {
            let mut s = stream.fork(lane, i);
            f(i, &mut s)
        })
        .collect()
}

/// Runs `f` on a pool with `workers` threads (0 means rayon's default).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}
