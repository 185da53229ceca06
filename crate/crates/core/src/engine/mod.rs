//! Bootstrap loops and the estimates built from them.
//!
//! Draw `b` of a run with seed `s` uses the random stream `rng::stream(s, b)`,
//! so draws can be computed in any order or in parallel and the weights of
//! any draw can be regenerated later.

mod distribution;
mod studentized;
mod variance;

use alloc::string::String;
use alloc::vec::Vec;

use crate::models::EstimatingEquation;
use crate::rng::stream;
use crate::solver::{solve_multistart, solve_weighted, SolveOptions};
use crate::weights::{WeightScheme, WeightVector};
use crate::{Error, Result};

pub use distribution::{
    fbn_distribution, ks_distance, ks_distance_normal, percentile_ci, EmpiricalDistribution,
    Interval,
};
pub use studentized::{studentized_stats, StudentizedStats};
pub use variance::{exact_variance_enumeration, variance_estimate, VarianceEstimate};

/// Largest tolerated share of fallback draws.
pub const MAX_FALLBACK_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrawStatus {
    Converged,
    /// The solve failed and the draw was set to the full-data estimate.
    Fallback,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Draw {
    pub beta: Vec<f64>,
    pub status: DrawStatus,
}

/// What to do when a resample's solve fails.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FallbackPolicy {
    /// Record `β̂_B = β̂_n` and mark the draw.
    #[default]
    UseEstimate,
    /// Abort the run with the solver error.
    Propagate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapConfig {
    pub scheme: WeightScheme,
    pub draws: usize,
    pub seed: u64,
    pub policy: FallbackPolicy,
    pub solve: SolveOptions,
    /// Starts tried besides `β̂_n`; the root with the smallest weighted
    /// objective is kept.
    pub extra_starts: Vec<Vec<f64>>,
}

impl BootstrapConfig {
    pub fn new(scheme: WeightScheme, draws: usize, seed: u64) -> Self {
        Self {
            scheme,
            draws,
            seed,
            policy: FallbackPolicy::default(),
            solve: SolveOptions::default(),
            extra_starts: Vec::new(),
        }
    }
}

/// Replicates of an estimator around the full-data estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapSample {
    pub method: String,
    pub beta_hat: Vec<f64>,
    pub draws: Vec<Draw>,
    /// `None` for resampling methods that do not reweight scores.
    pub scheme: Option<WeightScheme>,
    /// Scale `σ_n²` dividing squared deviations; 1 for non-GBS methods.
    pub sigma2: f64,
    pub fallback_count: usize,
    pub seed: u64,
}

impl BootstrapSample {
    pub fn from_draws(
        method: String,
        beta_hat: Vec<f64>,
        scheme: Option<WeightScheme>,
        sigma2: f64,
        seed: u64,
        draws: Vec<Draw>,
    ) -> Self {
        let fallback_count = draws
            .iter()
            .filter(|d| d.status == DrawStatus::Fallback)
            .count();
        Self {
            method,
            beta_hat,
            draws,
            scheme,
            sigma2,
            fallback_count,
            seed,
        }
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn fallback_rate(&self) -> f64 {
        if self.draws.is_empty() {
            0.0
        } else {
            self.fallback_count as f64 / self.draws.len() as f64
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.fallback_rate() > MAX_FALLBACK_FRACTION
    }

    /// Coordinate `a` of every draw.
    pub fn component(&self, a: usize) -> Vec<f64> {
        self.draws.iter().map(|d| d.beta[a]).collect()
    }

    /// Rejects runs with more than 20% fallback draws.
    pub fn checked(self) -> Result<Self> {
        if self.is_degenerate() {
            return Err(Error::DegenerateRun {
                fallback: self.fallback_count,
                total: self.draws.len(),
                sample: alloc::boxed::Box::new(self),
            });
        }
        Ok(self)
    }

    /// Weights used by draw `index` of a GBS run.
    pub fn weights(&self, index: usize) -> Option<WeightVector> {
        self.scheme.map(|s| draw_weights(&s, self.seed, index))
    }
}

/// Regenerates the weights of draw `index`.
pub fn draw_weights(scheme: &WeightScheme, seed: u64, index: usize) -> WeightVector {
    scheme.sample(&mut stream(seed, index as u64))
}

/// Solver errors that make a draw fall back instead of aborting the run.
fn is_solver_failure(e: &Error) -> bool {
    matches!(
        e,
        Error::NonConvergence { .. }
            | Error::SingularSystem { .. }
            | Error::Domain { .. }
            | Error::EmptyRootSet
    )
}

/// Solves one weighted system from `β̂_n` (and any extra starts).
pub fn solve_from_estimate<M: EstimatingEquation + ?Sized>(
    model: &M,
    weights: &[f64],
    beta_hat: &[f64],
    solve: &SolveOptions,
    extra_starts: &[Vec<f64>],
) -> Result<Vec<f64>> {
    if extra_starts.is_empty() {
        let opts = SolveOptions {
            init: Some(beta_hat.to_vec()),
            ..solve.clone()
        };
        return solve_weighted(model, weights, &opts).map(|s| s.beta);
    }
    let mut starts = Vec::with_capacity(extra_starts.len() + 1);
    starts.push(beta_hat.to_vec());
    starts.extend(extra_starts.iter().cloned());
    let set = solve_multistart(model, weights, &starts, solve)?;
    Ok(set.best().solution.beta.clone())
}

/// Turns a solve result into a draw according to `policy`.
pub fn settle(result: Result<Vec<f64>>, beta_hat: &[f64], policy: FallbackPolicy) -> Result<Draw> {
    match result {
        Ok(beta) => Ok(Draw {
            beta,
            status: DrawStatus::Converged,
        }),
        Err(e) if is_solver_failure(&e) && policy == FallbackPolicy::UseEstimate => Ok(Draw {
            beta: beta_hat.to_vec(),
            status: DrawStatus::Fallback,
        }),
        Err(e) => Err(e),
    }
}

/// Draw `index` of a GBS run.
pub fn bootstrap_draw<M: EstimatingEquation + ?Sized>(
    model: &M,
    beta_hat: &[f64],
    config: &BootstrapConfig,
    index: usize,
) -> Result<Draw> {
    let w = draw_weights(&config.scheme, config.seed, index);
    let result = solve_from_estimate(
        model,
        w.values(),
        beta_hat,
        &config.solve,
        &config.extra_starts,
    );
    settle(result, beta_hat, config.policy)
}

/// Assembles and checks a GBS sample from precomputed draws.
pub fn assemble_gbs(
    beta_hat: &[f64],
    config: &BootstrapConfig,
    draws: Vec<Draw>,
) -> Result<BootstrapSample> {
    BootstrapSample::from_draws(
        alloc::format!("gbs:{}", config.scheme.kind()),
        beta_hat.to_vec(),
        Some(config.scheme),
        config.scheme.sigma2(),
        config.seed,
        draws,
    )
    .checked()
}

/// Runs `config.draws` GBS replicates sequentially.
pub fn run_bootstrap<M: EstimatingEquation + ?Sized>(
    model: &M,
    beta_hat: &[f64],
    config: &BootstrapConfig,
) -> Result<BootstrapSample> {
    check_run(model, beta_hat, config)?;
    let draws = (0..config.draws)
        .map(|b| bootstrap_draw(model, beta_hat, config, b))
        .collect::<Result<Vec<_>>>()?;
    assemble_gbs(beta_hat, config, draws)
}

/// Preconditions shared by sequential and parallel runners.
pub fn check_run<M: EstimatingEquation + ?Sized>(
    model: &M,
    beta_hat: &[f64],
    config: &BootstrapConfig,
) -> Result<()> {
    if config.draws == 0 {
        return Err(Error::InsufficientSample {
            needed: 1,
            found: 0,
        });
    }
    if beta_hat.len() != model.dim() {
        return Err(Error::Shape {
            expected: model.dim(),
            found: beta_hat.len(),
        });
    }
    if config.scheme.n() != model.len() {
        return Err(Error::Shape {
            expected: model.len(),
            found: config.scheme.n(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{LinearRegression, SampleMean};
    use crate::weights::WeightKind;
    use alloc::vec;
    use rand::Rng;

    #[test]
    fn constant_weights_reproduce_the_estimate() {
        let m = SampleMean::new(vec![1.0, 4.0, 2.0]).unwrap();
        let cfg = BootstrapConfig::new(WeightScheme::constant(3).unwrap(), 1, 7);
        let s = run_bootstrap(&m, &[7.0 / 3.0], &cfg).unwrap();
        assert_eq!(s.draws.len(), 1);
        assert_eq!(s.draws[0].status, DrawStatus::Converged);
        assert!((s.draws[0].beta[0] - 7.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn linear_draws_match_weighted_least_squares() {
        let mut rng = stream(3, 3);
        let x: Vec<f64> = (0..30).map(|_| rng.random_range(0.5..2.0)).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|x| 2.0 * x + rng.random_range(-1.0..1.0))
            .collect();
        let m = LinearRegression::simple(x.clone(), y.clone()).unwrap();
        let beta_hat = solve_weighted(&m, &[1.0; 30], &SolveOptions::default())
            .unwrap()
            .beta;
        let cfg = BootstrapConfig::new(WeightScheme::multinomial(30).unwrap(), 200, 99);
        let s = run_bootstrap(&m, &beta_hat, &cfg).unwrap();
        for (b, d) in s.draws.iter().enumerate() {
            let w = s.weights(b).unwrap();
            let w = w.values();
            let num: f64 = (0..30).map(|i| w[i] * x[i] * y[i]).sum();
            let den: f64 = (0..30).map(|i| w[i] * x[i] * x[i]).sum();
            assert!((d.beta[0] - num / den).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_runs_are_rejected() {
        // A single data point: every multinomial draw that drops it is singular.
        let m =
            LinearRegression::simple(vec![1.0, 0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let cfg = BootstrapConfig::new(WeightScheme::multinomial(4).unwrap(), 100, 1);
        match run_bootstrap(&m, &[1.0], &cfg) {
            Err(Error::DegenerateRun {
                fallback,
                total,
                sample,
            }) => {
                assert_eq!(total, 100);
                assert!(fallback > 20);
                assert_eq!(sample.fallback_count, fallback);
                assert!(sample
                    .draws
                    .iter()
                    .filter(|d| d.status == DrawStatus::Fallback)
                    .all(|d| d.beta == vec![1.0]));
            }
            other => panic!("expected a degenerate run, got {other:?}"),
        }
        let cfg = BootstrapConfig {
            policy: FallbackPolicy::Propagate,
            ..cfg
        };
        assert!(matches!(
            run_bootstrap(&m, &[1.0], &cfg),
            Err(Error::SingularSystem { .. })
        ));
    }

    #[test]
    fn runs_are_deterministic() {
        let m = SampleMean::new((0..10).map(|i| i as f64).collect()).unwrap();
        let scheme = WeightScheme::new(WeightKind::Dirichlet { alpha: 1.0 }, 10).unwrap();
        let cfg = BootstrapConfig::new(scheme, 50, 5);
        let a = run_bootstrap(&m, &[4.5], &cfg).unwrap();
        let b = run_bootstrap(&m, &[4.5], &cfg).unwrap();
        assert_eq!(a, b);
        // Draw order does not matter.
        let d7 = bootstrap_draw(&m, &[4.5], &cfg, 7).unwrap();
        assert_eq!(d7, a.draws[7]);
    }

    #[test]
    fn shape_checks() {
        let m = SampleMean::new(vec![1.0, 2.0]).unwrap();
        let cfg = BootstrapConfig::new(WeightScheme::multinomial(3).unwrap(), 5, 0);
        assert!(matches!(
            run_bootstrap(&m, &[1.5], &cfg),
            Err(Error::Shape { .. })
        ));
    }
}
