//! Parallel runners.
//!
//! Draw `b` always uses `rng::stream(seed, b)` and outer replicate `r` always
//! uses `rng::derive(master, r)`, so results never depend on the worker count.
//! Parallel maps collect in index order; every reduction happens afterwards on
//! a single thread.

use gebs_core::baselines::{assemble_baseline, BaselineSpec, LogitWildPlan, ResidualPlan};
use gebs_core::engine::{
    assemble_gbs, bootstrap_draw, check_run, BootstrapConfig, BootstrapSample,
};
use gebs_core::models::{EstimatingEquation, Logistic, ResidualModel};
use gebs_core::solver::SolveOptions;
use gebs_core::Error;
use rayon::prelude::*;

use crate::error::{BenchError, Result};

/// Environment variable capping the number of workers.
pub const THREADS_ENV: &str = "GEBS_THREADS";

/// `requested` (or all cores), capped by `GEBS_THREADS` when set.
pub fn worker_count(requested: Option<usize>) -> Result<usize> {
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut count = requested.unwrap_or(available).max(1);
    if let Ok(cap) = std::env::var(THREADS_ENV) {
        let cap: usize = cap.trim().parse().ok().filter(|&c| c > 0).ok_or_else(|| {
            BenchError::Config(format!(
                "{THREADS_ENV} must be a positive integer, got {cap:?}"
            ))
        })?;
        count = count.min(cap);
    }
    Ok(count)
}

/// Runs `f` on a dedicated pool of `threads` workers.
pub fn with_workers<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| BenchError::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Parallel GBS run; identical to `engine::run_bootstrap`.
pub fn gbs<M: EstimatingEquation + Sync + ?Sized>(
    model: &M,
    beta_hat: &[f64],
    config: &BootstrapConfig,
) -> gebs_core::Result<BootstrapSample> {
    check_run(model, beta_hat, config)?;
    let draws = (0..config.draws)
        .into_par_iter()
        .map(|b| bootstrap_draw(model, beta_hat, config, b))
        .collect::<gebs_core::Result<Vec<_>>>()?;
    assemble_gbs(beta_hat, config, draws)
}

/// Parallel residual or wild bootstrap.
pub fn residual<M: ResidualModel + Sync>(
    model: &M,
    beta_hat: &[f64],
    spec: BaselineSpec,
    draws: usize,
    seed: u64,
    solve: &SolveOptions,
) -> gebs_core::Result<BootstrapSample> {
    if draws == 0 {
        return Err(Error::InsufficientSample {
            needed: 1,
            found: 0,
        });
    }
    let plan = ResidualPlan::new(model, beta_hat, spec)?;
    let out = (0..draws)
        .into_par_iter()
        .map(|b| plan.draw(model, beta_hat, seed, b, solve))
        .collect::<gebs_core::Result<Vec<_>>>()?;
    assemble_baseline(&spec, beta_hat, seed, out)
}

/// Parallel logit-scale wild bootstrap.
pub fn logit_wild(
    model: &Logistic,
    beta_hat: &[f64],
    spec: BaselineSpec,
    draws: usize,
    seed: u64,
    solve: &SolveOptions,
) -> gebs_core::Result<BootstrapSample> {
    if draws == 0 {
        return Err(Error::InsufficientSample {
            needed: 1,
            found: 0,
        });
    }
    let plan = LogitWildPlan::new(model, beta_hat, spec)?;
    let out = (0..draws)
        .into_par_iter()
        .map(|b| plan.draw(model, beta_hat, seed, b, solve))
        .collect::<gebs_core::Result<Vec<_>>>()?;
    assemble_baseline(&spec, beta_hat, seed, out)
}

/// Maps `f` over outer replicates `0..count` in parallel, in index order.
pub fn replicates<T: Send>(
    count: usize,
    f: impl Fn(usize) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    (0..count).into_par_iter().map(f).collect()
}
