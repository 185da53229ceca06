//! Experiment bench for the generalized bootstrap.
//!
//! Loads the bundled datasets, runs the AR(1), logistic, nonlinear
//! least-squares and weight-condition experiments in parallel, and renders
//! byte-stable CSV or JSON reports. The statistics live in [`gebs_core`].

pub mod config;
pub mod data;
pub mod error;
pub mod experiments;
pub mod histogram;
pub mod method;
pub mod parallel;
pub mod report;

pub use config::{Experiment, ExperimentConfig, Format, Scale};
pub use error::{BenchError, Result};
pub use experiments::run_experiment;
pub use histogram::{density_histogram, Histogram};
pub use report::{emit_report, ExperimentReport, ReportBody};

/// Runs `config` on `threads` workers.
pub fn run_with_workers(config: &ExperimentConfig, threads: usize) -> Result<ExperimentReport> {
    parallel::with_workers(threads, || run_experiment(config))?
}
