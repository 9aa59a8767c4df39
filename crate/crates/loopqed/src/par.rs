//! Deterministic sample-map execution, parallel or sequential.
//!
//! Estimators map a per-sample closure over indices `0..n`; each index owns
//! an independent counter-seeded random stream ([`crate::paths::sample_rng`]),
//! so the result vector is identical whichever execution path runs. The
//! `parallel` feature enables a rayon-backed map; the sequential path is
//! always compiled and is also used as the benchmark baseline. Worker count
//! can be forced with the `LOOPQED_WORKERS` environment variable.

/// Environment variable that caps the rayon worker count.
pub const WORKERS_ENV: &str = "LOOPQED_WORKERS";

/// Sequential map over sample indices; always available.
pub fn map_samples_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Parallel map over sample indices with deterministic output order.
#[cfg(feature = "parallel")]
pub fn map_samples_par<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    match configured_pool() {
        Some(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
        None => (0..n).into_par_iter().map(&f).collect(),
    }
}

#[cfg(feature = "parallel")]
fn configured_pool() -> Option<rayon::ThreadPool> {
    let workers: usize = std::env::var(WORKERS_ENV).ok()?.parse().ok().filter(|&w| w > 0)?;
    rayon::ThreadPoolBuilder::new().num_threads(workers).build().ok()
}

/// Dispatching map: parallel when compiled in (and not forced to one worker),
/// sequential otherwise.
pub fn map_samples<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        map_samples_par(n, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_samples_seq(n, f)
    }
}

/// Fixed-order (index-order) sum of per-sample values — the reduction every
/// estimator uses, so accumulation order never depends on thread scheduling.
pub fn reduce_sum(values: &[f64]) -> f64 {
    values.iter().sum()
}

/// Fixed-order mean and standard error of per-sample values.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = reduce_sum(values) / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
