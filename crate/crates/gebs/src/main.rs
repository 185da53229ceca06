use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gebs::{
    emit_report, parallel, run_with_workers, BenchError, Experiment, ExperimentConfig, Format,
    Scale,
};

#[derive(Parser)]
#[command(name = "gebs", version, about = "Generalized bootstrap experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its report.
    Run(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long, value_enum)]
    experiment: Experiment,
    /// Sample size; defaults to the experiment's (or the dataset's) size.
    #[arg(long)]
    n: Option<usize>,
    /// Outer Monte Carlo replicates.
    #[arg(long)]
    sims: Option<usize>,
    /// Bootstrap draws per replicate.
    #[arg(long)]
    boots: Option<usize>,
    /// Comma-separated methods: rb, wb[:normal|rademacher], gbs-<scheme>.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// Arguments for bare scheme names, e.g. `uniform:0.2,1.8`. Repeatable.
    #[arg(long = "scheme-args")]
    scheme_args: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "desk")]
    scale: Scale,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dataset file instead of the bundled one.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Histogram bins (nls).
    #[arg(long)]
    bins: Option<usize>,
    /// Worker threads (capped by GEBS_THREADS).
    #[arg(long)]
    threads: Option<usize>,
    /// Re-run the config embedded in a JSON report; other options are ignored.
    #[arg(long, conflicts_with_all = ["n", "sims", "boots", "methods", "seed", "data", "bins"])]
    replay: Option<PathBuf>,
}

fn dataset_size(
    experiment: Experiment,
    data: Option<&PathBuf>,
) -> Result<Option<usize>, BenchError> {
    Ok(match (experiment, data) {
        (Experiment::Glm, Some(p)) => Some(gebs::data::load_glm(p)?.data.total_trials()),
        (Experiment::Nls, Some(p)) => Some(gebs::data::load_isomerization(p)?.rows),
        _ => None,
    })
}

fn config(args: &RunArgs) -> Result<ExperimentConfig, BenchError> {
    if let Some(path) = &args.replay {
        let text = std::fs::read_to_string(path).map_err(|source| BenchError::Io {
            path: path.clone(),
            source,
        })?;
        return Ok(gebs::report::from_json(&text)
            .map_err(|e| BenchError::Config(format!("cannot replay {}: {e}", path.display())))?
            .config);
    }
    let mut c = ExperimentConfig::defaults(args.experiment, args.scale);
    if let Some(n) = dataset_size(args.experiment, args.data.as_ref())? {
        c.n = n;
    }
    if let Some(n) = args.n {
        c.n = n;
    }
    if let Some(s) = args.sims {
        c.sims = s;
    }
    if let Some(b) = args.boots {
        c.boots = b;
    }
    if let Some(m) = &args.methods {
        c.methods = m.clone();
    }
    c.scheme_args = args.scheme_args.clone();
    if let Some(s) = args.seed {
        c.seed = s;
    }
    if let Some(b) = args.bins {
        c.bins = b;
    }
    c.data = args.data.as_ref().map(|p| p.display().to_string());
    Ok(c)
}

fn run(args: RunArgs) -> Result<bool, BenchError> {
    let config = config(&args)?;
    let threads = parallel::worker_count(args.threads)?;
    let report = run_with_workers(&config, threads)?;
    emit_report(&report, args.format, args.out.as_deref())?;
    Ok(report.has_degenerate_runs())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => match run(args) {
            Ok(false) => ExitCode::SUCCESS,
            Ok(true) => {
                eprintln!("gebs: report written, but at least one run was degenerate");
                ExitCode::from(3)
            }
            Err(e) => {
                eprintln!("gebs: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
    }
}
