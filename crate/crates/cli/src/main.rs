use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use hestonreg::EstimateKind;

mod commands;
mod config;

use commands::{Failure, Options};
use config::RunConfig;

/// Solver and a priori estimate harness for the degenerate elliptic Heston operator.
#[derive(Parser, Debug)]
#[command(version)]
struct Cli {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output` in the config; default `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for the numerical kernels.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Seed for sampling-based checks (overrides `seed` in the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Restrict a sweep to one estimate kind, e.g. `h2_interior`.
    #[arg(long)]
    kind: Option<String>,
    /// Record wall-clock times in the sweep CSV (breaks byte reproducibility).
    #[arg(long)]
    timing: bool,
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let mut cfg = RunConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(kind) = &cli.kind {
        let kind: EstimateKind = kind.parse()?;
        cfg.estimate.kinds = vec![kind];
    }
    cfg.resolve();
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    cfg.output = Some(out.display().to_string());
    commands::run(
        &cfg,
        &Options {
            out,
            timing: cli.timing,
        },
    )
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads.max(1)).build_global() {
        eprintln!("error: cannot start {} threads: {e}", cli.threads);
        return ExitCode::from(1);
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
