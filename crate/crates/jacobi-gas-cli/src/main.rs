//! Experiment driver for the Jacobi log-gas toolkit.
//!
//! Subcommands map onto the library's pipeline stages; every run reads one
//! configuration file, writes its outputs into a single directory, and records
//! a manifest there. Exit codes: 0 success, 2 configuration error, 3 numeric
//! non-convergence, 4 insufficient statistics, 1 filesystem failure.

mod commands;
mod config;
mod manifest;

use clap::{Args, Parser, Subcommand};
use commands::CliError;
use config::ExperimentConfig;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "jacobi-gas",
    version,
    about = "Jacobi log-gas experiments: equilibrium measures, Metropolis sampling, \
             and large-deviation rate verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the equilibrium measure; export weights, V_eff, and constants.
    Equilibrium(CommonArgs),
    /// Draw configurations at one scale; export samples, diagnostics, and an
    /// empirical-vs-equilibrium histogram.
    Sample(CommonArgs),
    /// Full pipeline: per-scale outlier estimates, sandwich verdicts, and the
    /// rate fit against the equilibrium prediction.
    Ldp(CommonArgs),
    /// Sandwich-inequality checks only (no equilibrium solve, no rate fit).
    Sandwich(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base RNG seed (overrides `seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (overrides `JACOBI_GAS_THREADS` and `threads`).
    #[arg(long)]
    threads: Option<usize>,
}

const THREADS_ENV: &str = "JACOBI_GAS_THREADS";

/// Parses the config file and applies the command-line and environment
/// overrides. Thread precedence: `--threads`, then `JACOBI_GAS_THREADS`, then
/// the config's `threads` key, then the process default.
fn effective_config(args: &CommonArgs) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let mut cfg = ExperimentConfig::parse(&text).map_err(CliError::Config)?;
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.threads = match (args.threads, std::env::var(THREADS_ENV)) {
        (Some(t), _) => Some(t),
        (None, Ok(v)) => Some(v.trim().parse().map_err(|_| {
            CliError::Config(format!(
                "{THREADS_ENV}: expected a positive integer, got {v:?}"
            ))
        })?),
        (None, Err(_)) => cfg.threads,
    };
    if cfg.threads == Some(0) {
        return Err(CliError::Config("threads: must be >= 1".into()));
    }
    Ok(cfg)
}

fn run(command: &Command) -> Result<(), CliError> {
    let args = match command {
        Command::Equilibrium(a) | Command::Sample(a) | Command::Ldp(a) | Command::Sandwich(a) => a,
    };
    let cfg = effective_config(args)?;
    if let Some(t) = cfg.threads {
        // The global pool can only be configured once per process; a second
        // configuration attempt is not an error worth failing the run for.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match command {
        Command::Equilibrium(_) => commands::cmd_equilibrium(&cfg),
        Command::Sample(_) => commands::cmd_sample(&cfg),
        Command::Ldp(_) => commands::cmd_ldp(&cfg),
        Command::Sandwich(_) => commands::cmd_sandwich(&cfg),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli.command) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
