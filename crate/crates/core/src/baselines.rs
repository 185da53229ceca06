//! Residual and wild bootstrap comparators.
//!
//! Both build synthetic responses from the residuals at `β̂_n` and refit
//! with unit weights. The residual bootstrap regenerates the data from the
//! model (recursively for AR(1)); the wild bootstrap keeps regressors fixed. Their samples carry `sigma2 = 1`, so
//! `engine::variance_estimate` returns `E*(β̂* − β̂_n)²` directly.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::engine::{settle, BootstrapSample, Draw, FallbackPolicy};
use crate::models::{expit, EstimatingEquation, Logistic, ResidualModel};
use crate::rng::stream;
use crate::solver::{solve_weighted, SolveOptions};
use crate::{Error, Result};

/// Default offset in the empirical logits `(Y + δ)/(1 + 2δ)`.
pub const DEFAULT_LOGIT_DELTA: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    ResidualBootstrap,
    WildBootstrap,
}

/// Wild-bootstrap multiplier law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Multiplier {
    #[default]
    StandardNormal,
    Rademacher,
    /// Every multiplier is 0.
    Zero,
}

impl Multiplier {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Multiplier::StandardNormal => StandardNormal.sample(rng),
            Multiplier::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            Multiplier::Zero => 0.0,
        }
    }
}

impl fmt::Display for Multiplier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Multiplier::StandardNormal => "normal",
            Multiplier::Rademacher => "rademacher",
            Multiplier::Zero => "zero",
        })
    }
}

impl FromStr for Multiplier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(Multiplier::StandardNormal),
            "rademacher" => Ok(Multiplier::Rademacher),
            "zero" => Ok(Multiplier::Zero),
            _ => Err(Error::Parameter(alloc::format!("unknown multiplier `{s}`"))),
        }
    }
}

/// How the logistic wild bootstrap maps perturbed logits back to estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogitRefit {
    /// Solve the logistic score with responses `expit(Y*)`.
    #[default]
    Fractional,
    /// Least-squares line through the perturbed logits.
    LeastSquares,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineSpec {
    pub kind: BaselineKind,
    pub multiplier: Multiplier,
    pub delta: f64,
    pub logit_refit: LogitRefit,
}

impl BaselineSpec {
    pub fn residual() -> Self {
        Self {
            kind: BaselineKind::ResidualBootstrap,
            ..Self::wild()
        }
    }

    pub fn wild() -> Self {
        Self {
            kind: BaselineKind::WildBootstrap,
            multiplier: Multiplier::default(),
            delta: DEFAULT_LOGIT_DELTA,
            logit_refit: LogitRefit::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) {
            return Err(Error::Parameter("delta must be positive".into()));
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            BaselineKind::ResidualBootstrap => "rb",
            BaselineKind::WildBootstrap => "wb",
        }
    }
}

/// Residuals prepared once per dataset; draws are then independent.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualPlan {
    spec: BaselineSpec,
    residuals: Vec<f64>,
}

impl ResidualPlan {
    /// Residual bootstrap resamples centered residuals; the wild bootstrap
    /// multiplies the raw ones.
    pub fn new<M: ResidualModel>(model: &M, beta_hat: &[f64], spec: BaselineSpec) -> Result<Self> {
        spec.validate()?;
        let mut residuals = model.residuals(beta_hat);
        if spec.kind == BaselineKind::ResidualBootstrap {
            let mean = residuals.iter().sum::<f64>() / residuals.len() as f64;
            residuals.iter_mut().for_each(|r| *r -= mean);
        }
        Ok(Self { spec, residuals })
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    /// The synthetic dataset of draw `index`, before refitting.
    pub fn resample<M: ResidualModel>(
        &self,
        model: &M,
        beta_hat: &[f64],
        seed: u64,
        index: usize,
    ) -> Result<Resampled<M>> {
        let mut rng = stream(seed, index as u64);
        let n = self.residuals.len();
        match self.spec.kind {
            BaselineKind::ResidualBootstrap => {
                let synthetic: Vec<f64> = (0..n)
                    .map(|_| self.residuals[rng.random_range(0..n)])
                    .collect();
                model.rebuild(beta_hat, &synthetic).map(Resampled::Rebuilt)
            }
            BaselineKind::WildBootstrap => {
                let synthetic: Vec<f64> = self
                    .residuals
                    .iter()
                    .map(|r| self.spec.multiplier.sample(&mut rng) * r)
                    .collect();
                model
                    .perturb(beta_hat, &synthetic)
                    .map(Resampled::Perturbed)
            }
        }
    }

    pub fn draw<M: ResidualModel>(
        &self,
        model: &M,
        beta_hat: &[f64],
        seed: u64,
        index: usize,
        solve: &SolveOptions,
    ) -> Result<Draw> {
        let refitted = self
            .resample(model, beta_hat, seed, index)
            .and_then(|r| match r {
                Resampled::Rebuilt(m) => refit(&m, beta_hat, solve),
                Resampled::Perturbed(m) => refit(&m, beta_hat, solve),
            });
        settle(refitted, beta_hat, FallbackPolicy::UseEstimate)
    }
}

/// A residual-bootstrap dataset: rebuilt through the model dynamics, or a
/// fixed-design perturbation.
#[derive(Debug, Clone, PartialEq)]
pub enum Resampled<M: ResidualModel> {
    Rebuilt(M),
    Perturbed(M::FixedDesign),
}

fn refit<E: EstimatingEquation>(
    model: &E,
    beta_hat: &[f64],
    solve: &SolveOptions,
) -> Result<Vec<f64>> {
    let opts = SolveOptions {
        init: Some(beta_hat.to_vec()),
        ..solve.clone()
    };
    solve_weighted(model, &alloc::vec![1.0; model.len()], &opts).map(|s| s.beta)
}

fn assemble(name: &str, beta_hat: &[f64], seed: u64, draws: Vec<Draw>) -> Result<BootstrapSample> {
    BootstrapSample::from_draws(
        String::from(name),
        beta_hat.to_vec(),
        None,
        1.0,
        seed,
        draws,
    )
    .checked()
}

/// Packages baseline draws into a checked sample.
pub fn assemble_baseline(
    spec: &BaselineSpec,
    beta_hat: &[f64],
    seed: u64,
    draws: Vec<Draw>,
) -> Result<BootstrapSample> {
    assemble(spec.name(), beta_hat, seed, draws)
}

/// Resamples centered residuals with replacement and refits.
pub fn residual_bootstrap<M: ResidualModel>(
    model: &M,
    beta_hat: &[f64],
    draws: usize,
    seed: u64,
    solve: &SolveOptions,
) -> Result<BootstrapSample> {
    run_plan(
        model,
        beta_hat,
        BaselineSpec::residual(),
        draws,
        seed,
        solve,
    )
}

/// Multiplies each residual by an independent multiplier and refits.
pub fn wild_bootstrap<M: ResidualModel>(
    model: &M,
    beta_hat: &[f64],
    multiplier: Multiplier,
    draws: usize,
    seed: u64,
    solve: &SolveOptions,
) -> Result<BootstrapSample> {
    let spec = BaselineSpec {
        multiplier,
        ..BaselineSpec::wild()
    };
    run_plan(model, beta_hat, spec, draws, seed, solve)
}

fn run_plan<M: ResidualModel>(
    model: &M,
    beta_hat: &[f64],
    spec: BaselineSpec,
    draws: usize,
    seed: u64,
    solve: &SolveOptions,
) -> Result<BootstrapSample> {
    if draws == 0 {
        return Err(Error::InsufficientSample {
            needed: 1,
            found: 0,
        });
    }
    let plan = ResidualPlan::new(model, beta_hat, spec)?;
    let out = (0..draws)
        .map(|b| plan.draw(model, beta_hat, seed, b, solve))
        .collect::<Result<Vec<_>>>()?;
    assemble(spec.name(), beta_hat, seed, out)
}

/// Wild bootstrap on the logit scale for trial-level logistic data.
///
/// Trial `j` of group `i` gets the empirical logit
/// `t̃_ij = logit((Y_ij + δ)/(1 + 2δ))`, residual `r_ij = t̃_ij − t̂_i` and
/// perturbed logit `Y*_ij = t̂_i + U_ij r_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitWildPlan {
    spec: BaselineSpec,
    fitted: Vec<f64>,
    residuals: Vec<f64>,
}

impl LogitWildPlan {
    pub fn new(model: &Logistic, beta_hat: &[f64], spec: BaselineSpec) -> Result<Self> {
        spec.validate()?;
        let n = model.len();
        if (0..n).any(|i| model.trials(i) != 1.0) {
            return Err(Error::Unsupported(
                "logit wild bootstrap needs trial-level data".into(),
            ));
        }
        let d = spec.delta;
        let fitted: Vec<f64> = (0..n)
            .map(|i| beta_hat[0] + beta_hat[1] * model.covariate(i))
            .collect();
        let residuals = (0..n)
            .map(|i| {
                let p = (model.response(i) + d) / (1.0 + 2.0 * d);
                libm::log(p / (1.0 - p)) - fitted[i]
            })
            .collect();
        Ok(Self {
            spec,
            fitted,
            residuals,
        })
    }

    pub fn draw(
        &self,
        model: &Logistic,
        beta_hat: &[f64],
        seed: u64,
        index: usize,
        solve: &SolveOptions,
    ) -> Result<Draw> {
        let mut rng = stream(seed, index as u64);
        let ystar: Vec<f64> = self
            .fitted
            .iter()
            .zip(&self.residuals)
            .map(|(t, r)| t + self.spec.multiplier.sample(&mut rng) * r)
            .collect();
        let n = ystar.len();
        let x: Vec<f64> = (0..n).map(|i| model.covariate(i)).collect();
        let result = match self.spec.logit_refit {
            LogitRefit::LeastSquares => least_squares_line(&x, &ystar),
            LogitRefit::Fractional => {
                let y: Vec<f64> = ystar.iter().map(|&t| expit(t)).collect();
                let groups: Vec<usize> = (0..n).map(|i| model.group_of(i)).collect();
                Logistic::from_trials(&x, &y, &groups).and_then(|m| {
                    let opts = SolveOptions {
                        init: Some(beta_hat.to_vec()),
                        ..solve.clone()
                    };
                    solve_weighted(&m, &alloc::vec![1.0; n], &opts).map(|s| s.beta)
                })
            }
        };
        settle(result, beta_hat, FallbackPolicy::UseEstimate)
    }
}

fn least_squares_line(x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::SingularSystem {
            condition: f64::INFINITY,
        });
    }
    let slope = sxy / sxx;
    Ok(alloc::vec![my - slope * mx, slope])
}

/// Runs the logit-scale wild bootstrap sequentially.
pub fn wild_bootstrap_logit(
    model: &Logistic,
    beta_hat: &[f64],
    spec: BaselineSpec,
    draws: usize,
    seed: u64,
    solve: &SolveOptions,
) -> Result<BootstrapSample> {
    if draws == 0 {
        return Err(Error::InsufficientSample {
            needed: 1,
            found: 0,
        });
    }
    let plan = LogitWildPlan::new(model, beta_hat, spec)?;
    let out = (0..draws)
        .map(|b| plan.draw(model, beta_hat, seed, b, solve))
        .collect::<Result<Vec<_>>>()?;
    assemble("wb", beta_hat, seed, out)
}
