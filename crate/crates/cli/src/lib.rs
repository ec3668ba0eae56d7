//! `gclab`: configuration-driven runner for metric analysis, viscous solves,
//! vanishing-viscosity sweeps, decay checks and surface reconstruction.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bundle;
pub mod commands;
pub mod config;
pub mod error;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use bundle::Bundle;
use config::ExperimentConfig;
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "gclab", version, about = "Viscous Gauss–Codazzi experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory [default: the config's `output_dir`, then $OUTPUT_DIR, then ./out].
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Seed for random initial data (overrides the config).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Metric ODE, C₁, sign-switch time, φ admissibility.
    Metric,
    /// A single viscous solve.
    Solve,
    /// Vanishing-viscosity sweep with compactness diagnostics.
    Sweep,
    /// Reconstruct the surface from a solve bundle or a fixture.
    Reconstruct,
    /// Log-decay sufficiency scan.
    VerifyDecay,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Metric => "metric",
            Command::Solve => "solve",
            Command::Sweep => "sweep",
            Command::Reconstruct => "reconstruct",
            Command::VerifyDecay => "verify-decay",
        }
    }
}

/// Runs one command and returns the bundle directory.
pub fn run(cli: &Cli) -> Result<PathBuf, CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::config("--config is required"))?;
    let text = std::fs::read(path).map_err(|e| CliError::missing(format!("cannot read config {}: {e}", path.display())))?;
    let config = ExperimentConfig::parse(
        std::str::from_utf8(&text).map_err(|_| CliError::config(format!("{} is not UTF-8", path.display())))?,
    )?;
    let out = cli
        .out
        .clone()
        .or_else(|| config.output_dir.clone())
        .or_else(|| std::env::var_os("OUTPUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let seed = cli.seed.unwrap_or(config.seed);
    let mut bundle = Bundle::default();
    bundle.record_input(path, &text);
    bundle.add("config.toml", text.clone());

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::config(format!("--jobs: {e}")))?;
    pool.install(|| match cli.command {
        Command::Metric => commands::metric(&config, &mut bundle),
        Command::Solve => commands::solve(&config, seed, &out, &mut bundle),
        Command::Sweep => commands::sweep(&config, seed, &mut bundle),
        Command::Reconstruct => commands::reconstruct(&config, &mut bundle),
        Command::VerifyDecay => commands::verify_decay(&config, &mut bundle),
    })?;
    bundle.commit(&out, cli.command.name(), seed, &config)
}
