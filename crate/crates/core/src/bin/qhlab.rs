use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qhlab::lab::{run, ExperimentConfig, ExperimentKind, OutputFormat};
use qhlab::{Error, Result};

#[derive(Parser)]
#[command(name = "qhlab", version, about = "Quasihyperbolic geometry experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Table of j, k bounds and elementary bounds for configured pairs.
    Metric(Common),
    /// Uniformity estimate over a clearance schedule.
    Uniformity(Common),
    /// CQH constants, solidity envelopes and local quasisymmetry of a map.
    Mapcheck(Common),
    /// Uniformity of a subdomain before and after a map.
    Subinvariance(Common),
    /// Uniform disk mapped onto the slit disk.
    Counterexample(Common),
    /// Tower-scale constants and their chain inequalities.
    Ledger(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; the config's `output.dir`, then the working directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for reusable metric witnesses.
    #[arg(long)]
    cache: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

impl Command {
    fn split(self) -> (ExperimentKind, Common) {
        match self {
            Command::Metric(c) => (ExperimentKind::MetricTable, c),
            Command::Uniformity(c) => (ExperimentKind::Uniformity, c),
            Command::Mapcheck(c) => (ExperimentKind::Mapcheck, c),
            Command::Subinvariance(c) => (ExperimentKind::Subinvariance, c),
            Command::Counterexample(c) => (ExperimentKind::Counterexample, c),
            Command::Ledger(c) => (ExperimentKind::Ledger, c),
        }
    }
}

fn execute(kind: ExperimentKind, args: Common) -> Result<Vec<PathBuf>> {
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidParameter(format!("threads: {e}")))?;
    }
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Error::ConfigInvalid(format!("{}: {e}", args.config.display())))?;
    let mut cfg: ExperimentConfig = text.parse()?;
    match cfg.experiment {
        Some(k) if k != kind => {
            return Err(Error::ConfigInvalid(format!("config is for `{k}`, subcommand runs `{kind}`")));
        }
        _ => cfg.experiment = Some(kind),
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let format = args.format.unwrap_or(cfg.output.format);
    let dir = args
        .out
        .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let report = run(&cfg, args.cache.as_deref())?;
    report.emit(&dir, format)
}

fn main() -> ExitCode {
    let (kind, args) = Cli::parse().command.split();
    match execute(kind, args) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
