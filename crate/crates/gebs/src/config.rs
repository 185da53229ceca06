use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    /// Heteroscedastic AR(1): variance estimates of `√n(φ̂ − φ)`.
    Ar1,
    /// Grouped logistic regression: percentile-interval coverage of the logits.
    Glm,
    /// Isomerization least squares: bootstrap densities and roots.
    Nls,
    /// Weight-condition verdicts over a grid of sample sizes.
    WeightsCheck,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Ar1 => "ar1",
            Experiment::Glm => "glm",
            Experiment::Nls => "nls",
            Experiment::WeightsCheck => "weights-check",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Scale {
    /// Reduced replication counts that finish in seconds.
    Desk,
    /// Full published replication counts.
    Paper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

/// Everything that determines a report. Output location and format are
/// deliberately absent so that they cannot change the report bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Series length (ar1), total trials (glm), rows (nls) or the largest
    /// grid size (weights-check).
    pub n: usize,
    pub sims: usize,
    pub boots: usize,
    pub methods: Vec<String>,
    #[serde(default)]
    pub scheme_args: Vec<String>,
    pub seed: u64,
    pub scale: Scale,
    /// Histogram bins (nls only).
    #[serde(default = "default_bins")]
    pub bins: usize,
    /// Dataset path; `None` uses the bundled data.
    #[serde(default)]
    pub data: Option<String>,
}

pub const DEFAULT_SEED: u64 = 20050201;
pub const DEFAULT_BINS: usize = 40;

fn default_bins() -> usize {
    DEFAULT_BINS
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

impl ExperimentConfig {
    /// Defaults for an experiment at a given scale.
    ///
    /// | experiment | n | desk (sims, boots) | paper (sims, boots) |
    /// |---|---|---|---|
    /// | ar1 | 50 | (500, 300) | (10⁴, 10³) |
    /// | glm | 220 | (500, 300) | (10³, 10³) |
    /// | nls | 24 | (1, 1000) | (1, 1000) |
    /// | weights-check | 320 | (1, 10) | (1, 10) |
    pub fn defaults(experiment: Experiment, scale: Scale) -> Self {
        let (n, desk, paper, methods) = match experiment {
            Experiment::Ar1 => (
                50,
                (500, 300),
                (10_000, 1000),
                strings(&["rb", "wb", "gbs-multinomial", "gbs-uniform"]),
            ),
            Experiment::Glm => (
                220,
                (500, 300),
                (1000, 1000),
                strings(&["wb", "gbs-multinomial", "gbs-exp"]),
            ),
            Experiment::Nls => (
                24,
                (1, 1000),
                (1, 1000),
                strings(&["rb", "gbs-multinomial", "gbs-exp"]),
            ),
            Experiment::WeightsCheck => (
                320,
                (1, 10),
                (1, 10),
                strings(&[
                    "gbs-multinomial",
                    "gbs-jackknife:d=sqrt",
                    "gbs-uniform",
                    "gbs-exp",
                    "gbs-dirichlet",
                ]),
            ),
        };
        let (sims, boots) = match scale {
            Scale::Desk => desk,
            Scale::Paper => paper,
        };
        Self {
            experiment,
            n,
            sims,
            boots,
            methods,
            scheme_args: Vec::new(),
            seed: DEFAULT_SEED,
            scale,
            bins: DEFAULT_BINS,
            data: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sims < 1 {
            return Err(BenchError::Config("sims must be at least 1".into()));
        }
        if self.boots < 10 {
            return Err(BenchError::Config("boots must be at least 10".into()));
        }
        if self.bins < 10 {
            return Err(BenchError::Config("bins must be at least 10".into()));
        }
        if self.data.is_some()
            && matches!(self.experiment, Experiment::Ar1 | Experiment::WeightsCheck)
        {
            return Err(BenchError::Config(
                "ar1 and weights-check simulate their data and take no dataset".into(),
            ));
        }
        match self.experiment {
            Experiment::Ar1 if self.n < 3 => Err(BenchError::Config("ar1 needs n >= 3".into())),
            Experiment::Nls if self.sims != 1 => Err(BenchError::Config(
                "nls uses the observed data: sims must be 1".into(),
            )),
            Experiment::WeightsCheck if self.n < 40 => Err(BenchError::Config(
                "weights-check needs n >= 40 for a usable grid".into(),
            )),
            _ => Ok(()),
        }
    }
}
