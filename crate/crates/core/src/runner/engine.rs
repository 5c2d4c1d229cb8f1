//! Parallel map over indexed work items and order-fixed reductions.
//!
//! Each item draws from its own random stream and results are collected in
//! index order, so totals do not depend on the number of workers.

use rayon::prelude::*;

use crate::error::{Error, Result};

pub const THREADS_ENV: &str = "OWC_SIM_THREADS";

/// Worker cap from `OWC_SIM_THREADS`, if set to a positive integer.
pub fn env_threads() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
}

/// Runs `f` on a pool of `threads` workers (rayon's default when `None`).
pub fn with_workers<T, F>(threads: Option<usize>, f: F) -> Result<T>
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        b = b.num_threads(n);
    }
    let pool = b
        .build()
        .map_err(|e| Error::invalid("threads", e.to_string()))?;
    Ok(pool.install(f))
}

/// `f(0), …, f(n−1)` evaluated in parallel, returned in order.
pub fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Like [`par_map`] for fallible work; the first error by index wins.
pub fn try_par_map<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    par_map(n, f).into_iter().collect()
}

/// Splits `n` items into chunks of `chunk` and maps each chunk range.
pub fn par_chunks<T, F>(n: usize, chunk: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, std::ops::Range<usize>) -> T + Sync + Send,
{
    let chunk = chunk.max(1);
    let k = n.div_ceil(chunk);
    par_map(k, |c| f(c, c * chunk..((c + 1) * chunk).min(n)))
}

/// Pairwise (cascade) summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStderr {
    pub mean: f64,
    /// Standard error of the mean; zero for fewer than two values.
    pub stderr: f64,
    pub n: usize,
}

pub fn mean_stderr(xs: &[f64]) -> MeanStderr {
    let n = xs.len();
    if n == 0 {
        return MeanStderr {
            mean: f64::NAN,
            stderr: f64::NAN,
            n,
        };
    }
    let mean = pairwise_sum(xs) / n as f64;
    let stderr = if n > 1 {
        let dev: Vec<f64> = xs.iter().map(|x| (x - mean).powi(2)).collect();
        (pairwise_sum(&dev) / (n - 1) as f64 / n as f64).sqrt()
    } else {
        0.0
    };
    MeanStderr { mean, stderr, n }
}
