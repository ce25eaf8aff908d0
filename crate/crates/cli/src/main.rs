use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use smpc_cli::commands::{self, CliError, Verb};
use smpc_cli::config::ExperimentConfig;

/// Sampling-based MPC toolkit: exact posterior analysis on scalar problems,
/// MPPI and random-shooting planners, and closed-loop experiments.
///
/// Settings resolve in order: built-in defaults, then `--config`, then
/// `SMPC_*` environment variables, then flags. Written files are printed to
/// stdout, one path per line.
#[derive(Parser)]
#[command(name = "smpc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Configuration file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (overrides config and environment).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides config and environment).
    #[arg(long)]
    out: Option<String>,
    /// Worker threads; 0 uses every core (overrides config and environment).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Exact posterior densities and moments over a temperature list.
    Posterior(CommonArgs),
    /// One solver step on the scalar problem, with quadrature ground truth.
    Solve(CommonArgs),
    /// One closed-loop run in the point-mass environment.
    Simulate(CommonArgs),
    /// MPPI vs random shooting over a seed × sample-count grid.
    Compare(CommonArgs),
    /// Posterior moments and solver agreement across temperatures.
    SweepLambda(CommonArgs),
    /// Solver-vs-oracle error across sample counts.
    SweepSamples(CommonArgs),
    /// Posterior densities and moments across prior settings.
    SweepPrior(CommonArgs),
    /// Passage-side statistics for the obstacle scenario over many seeds.
    Symmetry(CommonArgs),
}

impl Command {
    fn split(self) -> (Verb, CommonArgs) {
        match self {
            Command::Posterior(a) => (Verb::Posterior, a),
            Command::Solve(a) => (Verb::Solve, a),
            Command::Simulate(a) => (Verb::Simulate, a),
            Command::Compare(a) => (Verb::Compare, a),
            Command::SweepLambda(a) => (Verb::SweepLambda, a),
            Command::SweepSamples(a) => (Verb::SweepSamples, a),
            Command::SweepPrior(a) => (Verb::SweepPrior, a),
            Command::Symmetry(a) => (Verb::Symmetry, a),
        }
    }
}

fn load(args: &CommonArgs) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        cfg.apply_text(&text).map_err(CliError::Config)?;
    }
    cfg.apply_env_overrides().map_err(CliError::Config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.out = out.clone();
    }
    if let Some(threads) = args.threads {
        cfg.threads = threads;
    }
    Ok(cfg)
}

fn main() {
    let cli = Cli::parse();
    let (verb, args) = cli.command.split();
    match load(&args).and_then(|cfg| commands::run(verb, &cfg)) {
        Ok(paths) => {
            for path in paths {
                println!("{}", path.display());
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
