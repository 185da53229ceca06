//! CSV datasets.
//!
//! | model | columns |
//! |-------|---------|
//! | AR(1) | `x` (the series `X_0, …, X_n`) |
//! | grouped logistic | `N,X` with optional `Y` (trials, covariate, successes) |
//! | isomerization | `H,P,I,y` |
//!
//! Two datasets ship with the crate: the 24-run isomerization table and the
//! fumigant assay covariates.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use gebs_core::models::{Ar1, Group, Isomerization, IsomerizationRow};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::{BenchError, Result};

const ISOMERIZATION_CSV: &str = include_str!("../../../data/isomerization.csv");
const FUMIGANT_CSV: &str = include_str!("../../../data/fumigant.csv");

pub const ISOMERIZATION_SOURCE: &str = "bundled:data/isomerization.csv";
pub const FUMIGANT_SOURCE: &str = "bundled:data/fumigant.csv";

/// A loaded dataset and where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub data: T,
    pub source: String,
    pub rows: usize,
}

/// Grouped binary design: `(N_i, X_i)` and, when observed, `Y_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct GlmData {
    pub design: Vec<(usize, f64)>,
    pub successes: Option<Vec<usize>>,
}

impl GlmData {
    pub fn total_trials(&self) -> usize {
        self.design.iter().map(|d| d.0).sum()
    }

    /// Groups with observed successes, if the file had a `Y` column.
    pub fn groups(&self) -> Option<Vec<Group>> {
        let y = self.successes.as_ref()?;
        Some(
            self.design
                .iter()
                .zip(y)
                .map(|(&(trials, x), &successes)| Group {
                    trials,
                    x,
                    successes,
                })
                .collect(),
        )
    }
}

#[derive(Deserialize)]
struct Ar1Record {
    x: f64,
}

#[derive(Deserialize)]
struct GlmRecord {
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "X")]
    x: f64,
    #[serde(rename = "Y", default)]
    y: Option<usize>,
}

#[derive(Deserialize)]
struct NlsRecord {
    #[serde(rename = "H")]
    h: f64,
    #[serde(rename = "P")]
    p: f64,
    #[serde(rename = "I")]
    i: f64,
    y: f64,
}

fn data_error(source: &str, row: usize, message: impl Into<String>) -> BenchError {
    BenchError::Data {
        source_name: source.to_string(),
        row,
        message: message.into(),
    }
}

fn records<T: DeserializeOwned, R: Read>(reader: R, source: &str) -> Result<Vec<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = Vec::new();
    for (k, rec) in rdr.deserialize().enumerate() {
        out.push(rec.map_err(|e| data_error(source, k + 1, e.to_string()))?);
    }
    if out.is_empty() {
        return Err(data_error(source, 0, "no data rows"));
    }
    Ok(out)
}

fn finite(source: &str, row: usize, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(data_error(source, row, "non-finite value"))
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_ar1<R: Read>(reader: R, source: &str) -> Result<Dataset<Ar1>> {
    let recs: Vec<Ar1Record> = records(reader, source)?;
    let series: Vec<f64> = recs.iter().map(|r| r.x).collect();
    for (k, x) in series.iter().enumerate() {
        finite(source, k + 1, &[*x])?;
    }
    let rows = series.len();
    Ok(Dataset {
        data: Ar1::new(series)?,
        source: source.to_string(),
        rows,
    })
}

pub fn read_glm<R: Read>(reader: R, source: &str) -> Result<Dataset<GlmData>> {
    let recs: Vec<GlmRecord> = records(reader, source)?;
    let observed = recs[0].y.is_some();
    let mut design = Vec::with_capacity(recs.len());
    let mut successes = Vec::with_capacity(recs.len());
    for (k, r) in recs.iter().enumerate() {
        let row = k + 1;
        finite(source, row, &[r.x])?;
        if r.n == 0 {
            return Err(data_error(source, row, "N must be positive"));
        }
        match (observed, r.y) {
            (true, Some(y)) if y > r.n => {
                return Err(data_error(
                    source,
                    row,
                    format!("Y = {y} exceeds N = {}", r.n),
                ))
            }
            (true, Some(y)) => successes.push(y),
            (false, None) => {}
            _ => {
                return Err(data_error(
                    source,
                    row,
                    "Y must be given on every row or on none",
                ))
            }
        }
        design.push((r.n, r.x));
    }
    Ok(Dataset {
        rows: design.len(),
        data: GlmData {
            design,
            successes: observed.then_some(successes),
        },
        source: source.to_string(),
    })
}

pub fn read_isomerization<R: Read>(reader: R, source: &str) -> Result<Dataset<Isomerization>> {
    let recs: Vec<NlsRecord> = records(reader, source)?;
    let mut rows = Vec::with_capacity(recs.len());
    for (k, r) in recs.iter().enumerate() {
        finite(source, k + 1, &[r.h, r.p, r.i, r.y])?;
        rows.push(IsomerizationRow {
            h: r.h,
            p: r.p,
            i: r.i,
            y: r.y,
        });
    }
    let count = rows.len();
    Ok(Dataset {
        data: Isomerization::new(rows)?,
        source: source.to_string(),
        rows: count,
    })
}

pub fn load_ar1(path: &Path) -> Result<Dataset<Ar1>> {
    read_ar1(open(path)?, &path.display().to_string())
}

pub fn load_glm(path: &Path) -> Result<Dataset<GlmData>> {
    read_glm(open(path)?, &path.display().to_string())
}

pub fn load_isomerization(path: &Path) -> Result<Dataset<Isomerization>> {
    read_isomerization(open(path)?, &path.display().to_string())
}

/// The 24-run isomerization table (Carr, 1960).
pub fn bundled_isomerization() -> Dataset<Isomerization> {
    read_isomerization(ISOMERIZATION_CSV.as_bytes(), ISOMERIZATION_SOURCE)
        .expect("bundled isomerization data is valid")
}

/// Fumigant assay design: ten log concentrations, 22 insects per group.
pub fn bundled_fumigant() -> Dataset<GlmData> {
    read_glm(FUMIGANT_CSV.as_bytes(), FUMIGANT_SOURCE).expect("bundled fumigant data is valid")
}
