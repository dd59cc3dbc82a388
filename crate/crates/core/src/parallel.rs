//! Deterministic parallel reductions.
//!
//! Work is split into fixed-size chunks independent of the worker count. Each chunk is
//! summed sequentially and the chunk partials are combined pairwise in index order, so
//! results are bit-identical for any number of threads.

use rayon::prelude::*;

/// Fixed chunk length used by every reduction in the crate.
pub const CHUNK: usize = 1024;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "NEMATIKIN_THREADS";

/// Sums `f(i)` for `i in 0..len` component-wise.
pub fn chunked_sum<const N: usize, F>(len: usize, f: F) -> [f64; N]
where
    F: Fn(usize) -> [f64; N] + Sync,
{
    let n_chunks = len.div_ceil(CHUNK);
    let partials: Vec<[f64; N]> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = [0.0; N];
            for i in c * CHUNK..((c + 1) * CHUNK).min(len) {
                let v = f(i);
                for k in 0..N {
                    acc[k] += v[k];
                }
            }
            acc
        })
        .collect();
    pairwise(&partials)
}

fn pairwise<const N: usize>(parts: &[[f64; N]]) -> [f64; N] {
    match parts.len() {
        0 => [0.0; N],
        1 => parts[0],
        n => {
            let (a, b) = parts.split_at(n / 2);
            let (x, y) = (pairwise(a), pairwise(b));
            let mut out = [0.0; N];
            for k in 0..N {
                out[k] = x[k] + y[k];
            }
            out
        }
    }
}

/// Scalar convenience wrapper over [`chunked_sum`].
pub fn sum_by<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    chunked_sum::<1, _>(len, |i| [f(i)])[0]
}

/// Builds a thread pool honouring `NEMATIKIN_THREADS` (unset or 0 means rayon's default).
pub fn pool_from_env() -> rayon::ThreadPool {
    let threads = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .unwrap_or(0);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("failed to build thread pool")
}
