//! `eqprice`: equilibrium security prices, implied-vol smiles, and
//! defaultable-bond paths for exponential-utility factor markets, with a
//! Monte Carlo cross-check. Writes CSV and JSON artifacts plus a manifest
//! recording how to reproduce them.

mod config;
mod output;
mod recipes;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use recipes::FigureId;

#[derive(Parser)]
#[command(
    name = "eqprice",
    version,
    about = "Equilibrium prices, smiles, and bond paths under exponential utility"
)]
struct Cli {
    /// Directory for CSV/JSON artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed override for recipes that simulate.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Path-count override for the oracle.
    #[arg(long, global = true)]
    paths: Option<usize>,
    /// Quadrature relative-tolerance override for transform recipes.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Price a security list under the square-root variance model.
    PriceHeston {
        #[arg(long)]
        config: PathBuf,
    },
    /// Price a security list under the mean-reverting jump model.
    PriceOujump {
        #[arg(long)]
        config: PathBuf,
    },
    /// Sweep an implied-vol smile over risk aversion.
    Smile {
        #[arg(long)]
        config: PathBuf,
    },
    /// Price a defaultable bond along supplied signal states.
    InfoBond {
        #[arg(long)]
        config: PathBuf,
    },
    /// Price an exponential-prior claim along supplied signal states.
    InfoExponential {
        #[arg(long)]
        config: PathBuf,
    },
    /// Monte Carlo estimates with standard errors for an affine market.
    Oracle {
        #[arg(long)]
        config: PathBuf,
    },
    /// Bundled figure recipes with pinned parameters.
    Figure { id: FigureId },
}

fn run(cli: &Cli) -> anyhow::Result<Vec<PathBuf>> {
    match &cli.cmd {
        Cmd::PriceHeston { config } => recipes::run_price_heston(config, &cli.out, cli.tol),
        Cmd::PriceOujump { config } => recipes::run_price_oujump(config, &cli.out, cli.tol),
        Cmd::Smile { config } => recipes::run_smile(config, &cli.out, cli.tol),
        Cmd::InfoBond { config } => recipes::run_info_bond(config, &cli.out),
        Cmd::InfoExponential { config } => recipes::run_info_exponential(config, &cli.out),
        Cmd::Oracle { config } => recipes::run_oracle(config, &cli.out, cli.seed, cli.paths),
        Cmd::Figure { id } => recipes::run_figure(*id, &cli.out, cli.seed, cli.tol),
    }
}

fn core_kind(e: &eqprice_core::Error) -> &'static str {
    use eqprice_core::Error::*;
    match e {
        PoleEncountered { .. } => "pole_encountered",
        InvalidTolerance(_) => "invalid_tolerance",
        BoundaryCase(_) => "boundary_case",
        HorizonExceeded { .. } => "horizon_exceeded",
        NonRealResult { .. } => "non_real_result",
        DomainViolation(_) => "domain_violation",
        QuadratureNotConverged(_) => "quadrature_not_converged",
        InvalidDamping(_) => "invalid_damping",
        Overflow(_) => "overflow",
        IntegrabilityViolation(_) => "integrability_violation",
        DegenerateTime { .. } => "degenerate_time",
        InvalidGrid(_) => "invalid_grid",
        InvalidParameter(_) => "invalid_parameter",
        UnsupportedMarket(_) => "unsupported_market",
        Config(_) => "config",
    }
}

/// Stable error tag for scripting against failures.
fn classify(err: &anyhow::Error) -> &'static str {
    if let Some(e) = err.downcast_ref::<eqprice_core::Error>() {
        return core_kind(e);
    }
    if err.downcast_ref::<serde_json::Error>().is_some() {
        return "config";
    }
    if err.downcast_ref::<std::io::Error>().is_some() {
        return "io";
    }
    "cli"
}

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
        }
        Err(err) => {
            let payload = serde_json::json!({
                "error": { "kind": classify(&err), "message": format!("{err:#}") }
            });
            eprintln!("{payload}");
            std::process::exit(1);
        }
    }
}
