//! The bench experiments.
//!
//! Outer replicate `r` simulates its data from `rng::stream(derive(seed, r), 0)`
//! and runs method `m` (0-based, in configuration order) with bootstrap seed
//! `derive(derive(seed, r), m + 1)`.

mod ar1;
mod glm;
mod nls;
mod weights_check;

use gebs_core::engine::BootstrapSample;
use gebs_core::rng::derive;

use crate::config::{Experiment, ExperimentConfig};
use crate::error::{BenchError, Result};
use crate::method::parse_methods;
use crate::report::ExperimentReport;

pub use glm::{true_logits, LOGIT_INTERCEPT, LOGIT_SLOPE};
pub use nls::{THETA_HAT_REPORTED, THETA_STAR_REPORTED};

/// Runs the configured experiment on the current rayon pool.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let methods = parse_methods(&config.methods, &config.scheme_args)?;
    let (body, notes) = match config.experiment {
        Experiment::Ar1 => ar1::run(config, &methods)?,
        Experiment::Glm => glm::run(config, &methods)?,
        Experiment::Nls => nls::run(config, &methods)?,
        Experiment::WeightsCheck => weights_check::run(config, &methods)?,
    };
    Ok(ExperimentReport {
        config: config.clone(),
        seed: config.seed,
        body,
        notes,
    })
}

pub(crate) fn replicate_seed(seed: u64, replicate: usize) -> u64 {
    derive(seed, replicate as u64)
}

pub(crate) fn method_seed(seed: u64, replicate: usize, method: usize) -> u64 {
    derive(replicate_seed(seed, replicate), method as u64 + 1)
}

/// A method's sample, or the sample carried by its degenerate-run error.
pub(crate) enum Outcome {
    Usable(BootstrapSample),
    Degenerate(BootstrapSample),
}

impl Outcome {
    pub(crate) fn from_result(result: gebs_core::Result<BootstrapSample>) -> Result<Self> {
        match result {
            Ok(s) => Ok(Outcome::Usable(s)),
            Err(gebs_core::Error::DegenerateRun { sample, .. }) => Ok(Outcome::Degenerate(*sample)),
            Err(e) => Err(BenchError::Core(e)),
        }
    }

    pub(crate) fn sample(&self) -> &BootstrapSample {
        match self {
            Outcome::Usable(s) | Outcome::Degenerate(s) => s,
        }
    }

    pub(crate) fn is_degenerate(&self) -> bool {
        matches!(self, Outcome::Degenerate(_))
    }
}

/// Checks a dataset-determined `n` against the configuration.
pub(crate) fn check_n(config: &ExperimentConfig, actual: usize, what: &str) -> Result<()> {
    if config.n != actual {
        return Err(BenchError::Config(format!(
            "n = {} but the dataset has {actual} {what}",
            config.n
        )));
    }
    Ok(())
}
