//! Command-line front end for the `dfrt-core` solvers.
//!
//! Every subcommand takes one JSON config (`--config`) refined by dotted
//! `--set key=value` overrides, validates it before computing, and writes
//! deterministic CSV/JSON/SVG artifacts into `--out`.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod parallel;
pub mod svg;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::Context;
use crate::config::RunConfig;
pub use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "dfrt", version, about = "Complex-scaled resonance calculations on 1D model systems")]
pub struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `out` in the config, default `out`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Threads for sweep commands; defaults to the available cores.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Dotted override such as `grid.n_points=401` or `theta=0.2`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub set: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// One-electron lowest resonance: resonance.json, density.csv.
    Solve1e,
    /// Two-electron lowest resonance: resonance.json, density.csv.
    Solve2e,
    /// Kohn-Sham SCF: scf.json, scf_density.csv, scf_iterations.csv.
    Scf,
    /// Resonance continued over `theta_list`: trajectory.csv/svg, summary.json.
    ThetaScan,
    /// Spectral-basis density convergence: convergence.csv/svg.
    BasisConv,
    /// Diagnostics of a density file: analysis.json, density.svg.
    DensityAnalyze,
    /// Analytic complex-scaling relations: scaling.csv.
    ScalingCheck,
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = RunConfig::load(cli.config.as_deref(), &cli.set)?;
    if cli.workers == Some(0) {
        return Err(CliError::config("--workers must be positive"));
    }
    let workers = cli.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let out = cli.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let ctx = Context { out, workers };
    match cli.command {
        Command::Solve1e => commands::solve1e(&cfg, &ctx),
        Command::Solve2e => commands::solve2e(&cfg, &ctx),
        Command::Scf => commands::scf(&cfg, &ctx),
        Command::ThetaScan => commands::theta_scan(&cfg, &ctx),
        Command::BasisConv => commands::basis_conv(&cfg, &ctx),
        Command::DensityAnalyze => {
            let base = cli.config.as_deref().and_then(|p| p.parent()).map(|p| p.to_path_buf());
            commands::density_analyze(&cfg, &ctx, base.as_deref())
        }
        Command::ScalingCheck => commands::scaling_check(&cfg, &ctx),
    }
}
