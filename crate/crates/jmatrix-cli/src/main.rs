//! `jmatrix`: generate scattering data, solve the direct problem, invert it
//! and refine the bound-state spectral data of a Jacobi Hamiltonian.

mod commands;
mod error;
mod files;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::files::BasisKind;

#[derive(Debug, Parser)]
#[command(name = "jmatrix", version, about = "J-matrix direct and inverse scattering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample the s-wave square-well phase shift and bound states (units of the well radius).
    Dataset(DatasetArgs),
    /// Phase shift, S-matrix and bound states of a Hamiltonian file.
    Forward(ForwardArgs),
    /// Reconstruct a Jacobi Hamiltonian from a dataset file.
    Invert(InvertArgs),
    /// Move the bound state of spectral data to a prescribed κ and 𝓜.
    Refine(RefineArgs),
    /// Regenerate the N = 7 square-well spectral table before and after refinement.
    Table(TableArgs),
}

#[derive(Debug, Args)]
struct DatasetArgs {
    /// Dimensionless well depth U0.
    #[arg(long)]
    u0: f64,
    /// Largest sampled momentum.
    #[arg(long, default_value_t = 6.0)]
    k0: f64,
    /// Number of samples on [0, k0].
    #[arg(long, default_value_t = 121)]
    points: usize,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct ForwardArgs {
    /// Hamiltonian file.
    hamiltonian: PathBuf,
    /// Largest momentum of the output grid.
    #[arg(long, default_value_t = 6.0)]
    k0: f64,
    /// Number of grid points on (0, k0].
    #[arg(long, default_value_t = 120)]
    points: usize,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct InvertArgs {
    /// Dataset file.
    dataset: PathBuf,
    #[arg(long, value_enum, default_value_t = BasisKind::Osc)]
    basis: BasisKind,
    /// Order of the Jacobi Hamiltonian.
    #[arg(long = "N")]
    n: usize,
    /// Oscillator length (basis osc).
    #[arg(long)]
    rho: Option<f64>,
    /// Laguerre scale (basis lag).
    #[arg(long)]
    bscale: Option<f64>,
    /// Use only the data with k ≤ k0 (default: all of it).
    #[arg(long)]
    k0: Option<f64>,
    /// Width, in momentum units, of the blend between data and tail.
    #[arg(long, default_value_t = 0.1)]
    taper_width: f64,
    /// Gauss-Legendre nodes per quadrature panel.
    #[arg(long, default_value_t = 32)]
    nodes: usize,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct RefineArgs {
    /// Spectral file (oscillator basis).
    spectral: PathBuf,
    /// Target bound-state κ.
    #[arg(long)]
    kappa: f64,
    /// Target asymptotic normalization constant 𝓜.
    #[arg(long)]
    norm_const: f64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct TableArgs {
    /// Also write the table as CSV to this directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Dataset(a) => commands::dataset(&a),
        Command::Forward(a) => commands::forward(&a),
        Command::Invert(a) => commands::invert(&a),
        Command::Refine(a) => commands::refine(&a),
        Command::Table(a) => table::run(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("jmatrix: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
