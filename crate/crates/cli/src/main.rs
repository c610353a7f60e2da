//! `geosum`: configuration-driven experiments on geometric sums and their
//! asymmetric Laplace limits.
//!
//! Exit status: 0 on success, 1 on a runtime failure or a failed verdict, 2 on a
//! usage or configuration error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "geosum", version, about = "Geometric sums and asymmetric Laplace limits")]
struct Cli {
    /// Overrides the RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for simulation.
    #[arg(long, global = true, env = "GEOSUM_WORKERS", value_parser = clap::value_parser!(u64).range(1..))]
    workers: Option<u64>,
    /// Overrides the output directory.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Print the machine-readable report instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Exit with status 1 when any verdict fails.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one batch per p in the config's p_grid.
    Simulate { config: PathBuf },
    /// Check the hypotheses and measure convergence to the limit law.
    Diagnose { config: PathBuf },
    /// Verify the supporting inequalities and exact series.
    Lemmas(LemmaArgs),
    /// Multiplicative wealth with a geometric lifetime, with Hill tail fits.
    WealthDemo(WealthArgs),
}

#[derive(Args, Debug)]
pub struct LemmaArgs {
    /// Exponent(s) for the power-geometric sum bound; restricts the run to that check.
    #[arg(long)]
    pub alpha: Vec<f64>,
    /// Success probabilities for the sum bound; restricts the run to that check.
    #[arg(long)]
    pub p: Vec<f64>,
}

#[derive(Args, Debug)]
pub struct WealthArgs {
    #[arg(long, default_value_t = 1e-3)]
    pub p: f64,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    /// Initial wealth.
    #[arg(long, default_value_t = 1.0)]
    pub w0: f64,
    /// Standard deviation of the i.i.d. Gaussian log shocks.
    #[arg(long, default_value_t = std::f64::consts::SQRT_2, conflicts_with_all = ["constant_growth", "spec"])]
    pub shock_sd: f64,
    /// Drift `a` of the log shocks (added as `p^(1/2) a` per period).
    #[arg(long, default_value_t = 0.0, conflicts_with_all = ["constant_growth", "spec"])]
    pub drift: f64,
    /// Deterministic growth factor per period instead of random shocks.
    #[arg(long, conflicts_with = "spec")]
    pub constant_growth: Option<f64>,
    /// TOML file with a scalar sequence spec for the log shocks.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, default_value_t = 0.01)]
    pub tail_fraction: f64,
}

/// Global options shared by all subcommands.
pub struct Globals {
    pub overrides: config::Overrides,
    pub json: bool,
    pub strict: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let globals = Globals {
        overrides: config::Overrides {
            seed: cli.seed,
            workers: cli.workers.map(|w| w as usize),
            out_dir: cli.out_dir,
        },
        json: cli.json,
        strict: cli.strict,
    };
    let outcome = match &cli.command {
        Command::Simulate { config } => commands::simulate(config, &globals),
        Command::Diagnose { config } => commands::diagnose(config, &globals),
        Command::Lemmas(args) => commands::lemmas(args, &globals),
        Command::WealthDemo(args) => commands::wealth_demo(args, &globals),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(commands::Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(commands::Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
