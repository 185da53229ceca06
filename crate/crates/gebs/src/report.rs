//! Experiment reports and their CSV / JSON renderings.
//!
//! Every number is rounded to 6 significant digits when the report is built,
//! so the JSON round-trips exactly and both renderings are byte-stable.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Format};
use crate::error::{BenchError, Result};
use crate::histogram::Histogram;

/// Rounds to 6 significant digits.
pub fn sig6(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.5e}").parse().expect("formatted float parses")
}

pub fn sig6_vec(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| sig6(x)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub body: ReportBody,
    /// Interpretation choices that affect how the numbers should be read.
    pub notes: Vec<String>,
}

impl ExperimentReport {
    /// True when any method had a degenerate run.
    pub fn has_degenerate_runs(&self) -> bool {
        match &self.body {
            ReportBody::VarianceTable { rows, .. } => rows.iter().any(|r| r.degenerate_runs > 0),
            ReportBody::CoverageTable { rows, .. } => rows.iter().any(|r| r.degenerate_runs > 0),
            ReportBody::Densities { methods, .. } => methods.iter().any(|m| m.degenerate),
            ReportBody::Conditions { .. } => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum ReportBody {
    /// Mean and variance of variance estimates across outer replicates.
    VarianceTable {
        truth: TruthRow,
        rows: Vec<VarianceRow>,
    },
    /// Mean percentile-interval length and coverage per design point.
    CoverageTable {
        rows: Vec<CoverageRow>,
        /// Outer replicates whose full-data fit failed; they enter no cell.
        failed_fits: usize,
    },
    /// Bootstrap densities with detected modes.
    Densities {
        estimate: Vec<f64>,
        psi_hat: f64,
        roots: Vec<RootRow>,
        /// Criterion values at the supplied start points.
        starts: Vec<RootRow>,
        smoothing_bins: usize,
        prominence: f64,
        trim: f64,
        methods: Vec<DensityMethod>,
    },
    Conditions {
        grid: Vec<usize>,
        rows: Vec<ConditionRow>,
    },
}

/// Direct Monte Carlo of `V_n = E(√n(φ̂ − φ))²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRow {
    pub mean: f64,
    pub variance: f64,
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceRow {
    pub method: String,
    pub spec: String,
    /// Mean over replicates of `n · V`.
    pub mean_var_est: f64,
    pub var_var_est: f64,
    /// Monte Carlo standard error of `mean_var_est`.
    pub mean_stderr: f64,
    pub fallback_rate: f64,
    /// Replicates whose run exceeded the fallback limit; excluded from the means.
    pub degenerate_runs: usize,
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub method: String,
    pub spec: String,
    /// 1-based design point.
    pub case: usize,
    pub true_logit: f64,
    pub mean_ci_length: f64,
    pub coverage_pct: f64,
    pub fallback_rate: f64,
    pub degenerate_runs: usize,
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootRow {
    pub label: String,
    pub theta: Vec<f64>,
    pub psi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityMethod {
    pub method: String,
    pub spec: String,
    pub fallback_rate: f64,
    /// The run exceeded the fallback limit; histograms still use its draws.
    pub degenerate: bool,
    pub converged_draws: usize,
    /// One histogram per parameter coordinate, from the converged draws;
    /// empty when too few converged.
    pub histograms: Vec<Histogram>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionRow {
    pub scheme: String,
    pub condition: String,
    pub clause: String,
    pub pass: bool,
    pub slope: Option<f64>,
    pub threshold: Option<f64>,
    pub note: String,
}

fn flagged(method: &str, degenerate: usize) -> String {
    if degenerate == 0 {
        method.to_string()
    } else {
        format!("{method} [degenerate runs: {degenerate}]")
    }
}

fn num(x: f64) -> String {
    format!("{}", sig6(x))
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// CSV rendering. Column order is fixed per report shape.
pub fn to_csv(report: &ExperimentReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    match &report.body {
        ReportBody::VarianceTable { truth, rows } => {
            w.write_record(["method", "mean_var_est", "var_var_est", "fallback_rate"])?;
            for r in rows {
                w.write_record([
                    flagged(&r.method, r.degenerate_runs),
                    num(r.mean_var_est),
                    num(r.var_var_est),
                    num(r.fallback_rate),
                ])?;
            }
            w.write_record([
                "truth".to_string(),
                num(truth.mean),
                num(truth.variance),
                String::new(),
            ])?;
        }
        ReportBody::CoverageTable { rows, .. } => {
            w.write_record([
                "method",
                "case",
                "true_logit",
                "mean_ci_length",
                "coverage_pct",
                "fallback_rate",
            ])?;
            for r in rows {
                w.write_record([
                    flagged(&r.method, r.degenerate_runs),
                    r.case.to_string(),
                    num(r.true_logit),
                    num(r.mean_ci_length),
                    num(r.coverage_pct),
                    num(r.fallback_rate),
                ])?;
            }
        }
        ReportBody::Densities { methods, .. } => {
            w.write_record([
                "method",
                "parameter",
                "bin",
                "lower",
                "upper",
                "mass",
                "mode",
            ])?;
            for m in methods {
                let label = flagged(&m.method, usize::from(m.degenerate));
                for (a, h) in m.histograms.iter().enumerate() {
                    for (k, mass) in h.masses.iter().enumerate() {
                        let lower = h.lo + k as f64 * h.bin_width;
                        let center = lower + 0.5 * h.bin_width;
                        let is_mode = h
                            .modes
                            .iter()
                            .any(|c| (c - center).abs() < 1e-9 * h.bin_width.max(1.0));
                        w.write_record([
                            label.clone(),
                            (a + 1).to_string(),
                            (k + 1).to_string(),
                            num(lower),
                            num(lower + h.bin_width),
                            num(*mass),
                            u8::from(is_mode).to_string(),
                        ])?;
                    }
                }
            }
        }
        ReportBody::Conditions { rows, .. } => {
            w.write_record([
                "scheme",
                "condition",
                "clause",
                "pass",
                "slope",
                "threshold",
            ])?;
            for r in rows {
                w.write_record([
                    r.scheme.clone(),
                    r.condition.clone(),
                    r.clause.clone(),
                    r.pass.to_string(),
                    opt(r.slope),
                    opt(r.threshold),
                ])?;
            }
        }
    }
    let bytes = w
        .into_inner()
        .map_err(|e| BenchError::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn to_json(report: &ExperimentReport) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

pub fn from_json(text: &str) -> Result<ExperimentReport> {
    Ok(serde_json::from_str(text)?)
}

pub fn render(report: &ExperimentReport, format: Format) -> Result<String> {
    match format {
        Format::Csv => to_csv(report),
        Format::Json => to_json(report),
    }
}

/// Writes the report to `path`, or to stdout when `path` is `None`.
pub fn emit_report(report: &ExperimentReport, format: Format, path: Option<&Path>) -> Result<()> {
    let text = render(report, format)?;
    match path {
        Some(p) => fs::write(p, text).map_err(|source| BenchError::Io {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| BenchError::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}
