//! Experiment runner: seeded sampling, replicated estimation with a paired
//! design, evidence workflows and report files.

mod bayes;
mod experiment;
mod report;

pub use bayes::{
    build_interaction_basis, gold_standard, log_shift, run_bayes, BayesConfig, Dataset, GoldStandard,
    DEFAULT_PILOT,
};
pub use experiment::{
    run_experiment, BasisGrid, ExperimentConfig, ExperimentReport, MethodName, SummaryRow,
};
pub use report::{emit_report, ReportFormat};

use ndarray::Array2;
use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{CvError, Result};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "CVMC_THREADS";

/// `n x d` i.i.d. uniform draws in the open cube, stream 0 of `seed`.
pub fn sample_uniform(d: usize, n: usize, seed: u64) -> Array2<f64> {
    sample_uniform_stream(d, n, seed, 0)
}

/// `n x d` i.i.d. uniform draws from stream `stream` of the ChaCha8
/// generator keyed by `seed`. Rows are filled in order.
pub fn sample_uniform_stream(d: usize, n: usize, seed: u64, stream: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let v: Vec<f64> = (0..n * d).map(|_| rng.sample(Open01)).collect();
    Array2::from_shape_vec((n, d), v).expect("buffer matches shape")
}

/// Worker count: `CVMC_THREADS` when set to a positive integer, otherwise
/// the available parallelism.
pub fn thread_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&t| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Evaluate `f(0..count)` on up to [`thread_count`] threads; results come
/// back in index order, and the first error in index order is returned.
pub fn run_indexed<T, F>(count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let threads = thread_count();
    if threads <= 1 || count <= 1 {
        return (0..count).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CvError::Config(format!("could not start thread pool: {e}")))?;
    let out: Vec<Result<T>> = pool.install(|| (0..count).into_par_iter().map(&f).collect());
    out.into_iter().collect()
}
