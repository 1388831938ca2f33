//! Ordered parallel map over task indices.
//!
//! Every task derives its own RNG from its index, and results are collected
//! in index order, so output does not depend on the worker count.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Evaluates `f(0..n)` on `workers` threads and returns results in index order.
pub fn map_tasks<T, F>(n: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    if workers <= 1 {
        return (0..n as u64).map(&f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Precondition(format!("cannot start worker pool: {e}")))?;
    pool.install(|| (0..n as u64).into_par_iter().map(&f).collect())
}

/// Mean and standard error of the mean.
pub fn mean_and_std_error(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}
