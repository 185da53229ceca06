//! Weight-condition verdicts for each configured scheme over the grid
//! `n, n/2, …, n/32` (sizes below 5 dropped).

use gebs_core::weights::{check_conditions, CheckSettings, Verdict, WeightScheme};

use crate::config::ExperimentConfig;
use crate::error::{BenchError, Result};
use crate::method::{Method, MethodKind};
use crate::report::{sig6, ConditionRow, ReportBody};

pub fn grid(n: usize) -> Vec<usize> {
    let mut g: Vec<usize> = (0..=5).rev().map(|k| n >> k).filter(|&m| m >= 5).collect();
    g.dedup();
    g
}

pub(super) fn run(
    config: &ExperimentConfig,
    methods: &[Method],
) -> Result<(ReportBody, Vec<String>)> {
    let grid = grid(config.n);
    let settings = CheckSettings {
        seed: config.seed,
        ..CheckSettings::default()
    };
    let mut rows = Vec::new();
    for method in methods {
        let MethodKind::Gbs(family) = method.kind else {
            return Err(BenchError::Config(format!(
                "weights-check takes gbs methods only, got {:?}",
                method.label
            )));
        };
        let report = check_conditions(
            |n| WeightScheme::new(family.kind(n), n),
            &grid,
            |_| 1,
            &settings,
        )?;
        let verdicts: [(&str, &Verdict); 4] = [
            ("BW", &report.bw),
            ("CLTW", &report.cltw),
            ("VW(a)", &report.vw_a),
            ("VW(b)", &report.vw_b),
        ];
        for (name, verdict) in verdicts {
            rows.push(ConditionRow {
                scheme: method.label.clone(),
                condition: name.to_string(),
                clause: "all".to_string(),
                pass: verdict.pass,
                slope: None,
                threshold: None,
                note: String::new(),
            });
            for c in &verdict.clauses {
                rows.push(ConditionRow {
                    scheme: method.label.clone(),
                    condition: name.to_string(),
                    clause: c.name.clone(),
                    pass: c.pass,
                    slope: c.slope.map(sig6),
                    threshold: Some(sig6(c.threshold)),
                    note: c.note.clone(),
                });
            }
        }
    }
    let notes = vec![
        format!(
            "rates are log-log slopes over the last {} grid points with tolerance {}; p = 1",
            settings.tail_points, settings.slope_tolerance
        ),
        format!("quantities below {:e} count as zero", settings.negligible),
    ];
    Ok((ReportBody::Conditions { grid, rows }, notes))
}
