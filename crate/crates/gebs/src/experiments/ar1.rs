//! Heteroscedastic AR(1): `X_t = 0.2 X_{t−1} + e_t`, `X_0 = 0`,
//! `Var e_t = 1` for odd `t` and `100` for even `t`.

use gebs_core::baselines::{BaselineSpec, Multiplier};
use gebs_core::engine::{variance_estimate, BootstrapConfig};
use gebs_core::models::simulate_ar1;
use gebs_core::rng::stream;
use gebs_core::solver::SolveOptions;
use gebs_core::stats::{mean, sample_variance};

use super::{method_seed, replicate_seed, Outcome};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::method::{Method, MethodKind};
use crate::parallel;
use crate::report::{sig6, ReportBody, TruthRow, VarianceRow};

pub const PHI: f64 = 0.2;
pub const VAR_ODD: f64 = 1.0;
pub const VAR_EVEN: f64 = 100.0;

struct Cell {
    value: Option<f64>,
    fallbacks: usize,
    draws: usize,
}

pub(super) fn run(
    config: &ExperimentConfig,
    methods: &[Method],
) -> Result<(ReportBody, Vec<String>)> {
    let n = config.n;
    let solve = SolveOptions::default();
    let reps = parallel::replicates(config.sims, |r| {
        let mut rng = stream(replicate_seed(config.seed, r), 0);
        let model = simulate_ar1(PHI, VAR_ODD, VAR_EVEN, n, &mut rng)?;
        let phi_hat = [model.least_squares()];
        let truth = n as f64 * (phi_hat[0] - PHI).powi(2);
        let mut cells = Vec::with_capacity(methods.len());
        for (m, method) in methods.iter().enumerate() {
            let seed = method_seed(config.seed, r, m);
            let result = match method.kind {
                MethodKind::Residual => parallel::residual(
                    &model,
                    &phi_hat,
                    BaselineSpec::residual(),
                    config.boots,
                    seed,
                    &solve,
                ),
                MethodKind::Wild(multiplier) => parallel::residual(
                    &model,
                    &phi_hat,
                    BaselineSpec {
                        multiplier,
                        ..BaselineSpec::wild()
                    },
                    config.boots,
                    seed,
                    &solve,
                ),
                MethodKind::Gbs(family) => {
                    let bc = BootstrapConfig::new(family.scheme(n)?, config.boots, seed);
                    parallel::gbs(&model, &phi_hat, &bc)
                }
            };
            let outcome = Outcome::from_result(result)?;
            let sample = outcome.sample();
            let value = if outcome.is_degenerate() {
                None
            } else {
                Some(n as f64 * variance_estimate(sample)?.scalar())
            };
            cells.push(Cell {
                value,
                fallbacks: sample.fallback_count,
                draws: sample.len(),
            });
        }
        Ok((truth, cells))
    })?;

    let truths: Vec<f64> = reps.iter().map(|r| r.0).collect();
    let truth = TruthRow {
        mean: sig6(mean(&truths)),
        variance: sig6(if truths.len() > 1 {
            sample_variance(&truths)
        } else {
            0.0
        }),
        replicates: truths.len(),
    };
    let rows = methods
        .iter()
        .enumerate()
        .map(|(m, method)| {
            let values: Vec<f64> = reps.iter().filter_map(|r| r.1[m].value).collect();
            let fallbacks: usize = reps.iter().map(|r| r.1[m].fallbacks).sum();
            let draws: usize = reps.iter().map(|r| r.1[m].draws).sum();
            let var = if values.len() > 1 {
                sample_variance(&values)
            } else {
                0.0
            };
            VarianceRow {
                method: method.label.clone(),
                spec: method.spec(),
                mean_var_est: sig6(if values.is_empty() {
                    0.0
                } else {
                    mean(&values)
                }),
                var_var_est: sig6(var),
                mean_stderr: sig6(if values.is_empty() {
                    0.0
                } else {
                    (var / values.len() as f64).sqrt()
                }),
                fallback_rate: sig6(fallbacks as f64 / draws.max(1) as f64),
                degenerate_runs: reps.len() - values.len(),
                replicates: reps.len(),
            }
        })
        .collect();
    let mut notes = vec![
        format!("phi = {PHI}, error variance {VAR_ODD} at odd t and {VAR_EVEN} at even t, X_0 = 0"),
        "cells estimate V_n = E(sqrt(n)(phi_hat - phi))^2: each method contributes n times its variance estimate"
            .to_string(),
        "truth is the direct Monte Carlo mean and variance of n(phi_hat - phi)^2".to_string(),
    ];
    if methods
        .iter()
        .any(|m| matches!(m.kind, MethodKind::Wild(_)))
    {
        notes.push(format!(
            "wb keeps the observed lags fixed: X*_t = phi_hat X_(t-1) + U_t e_t, U_t ~ {}",
            methods
                .iter()
                .find_map(|m| match m.kind {
                    MethodKind::Wild(u) => Some(u),
                    _ => None,
                })
                .unwrap_or(Multiplier::StandardNormal)
        ));
    }
    if methods.iter().any(|m| m.kind == MethodKind::Residual) {
        notes.push(
            "rb resamples centered residuals and rebuilds the series recursively from X_0"
                .to_string(),
        );
    }
    Ok((ReportBody::VarianceTable { truth, rows }, notes))
}
