use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod closed_forms;
mod commands;

/// Box dimensions of orbits near fixed points and flow singularities.
#[derive(Parser, Debug)]
#[command(name = "orbitdim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate an orbit and estimate its box dimension.
    Dim(DimArgs),
    /// Classify the fixed point or singularity (spectral, optionally fractal).
    Classify(ClassifyArgs),
    /// Solve for an invariant-manifold series and the restricted map.
    Manifold(ManifoldArgs),
    /// Dump a raw orbit as CSV.
    Orbit(OrbitArgs),
    /// List catalog entries, or print one entry's definition.
    Catalog(CatalogArgs),
}

#[derive(Args, Debug, Clone)]
pub struct SourceArgs {
    /// Catalog entry name.
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    pub system: Option<String>,
    /// System definition file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Parameter overrides, e.g. `λ1=0.5,λ2=2,b1=1`.
    #[arg(long, value_delimiter = ',')]
    pub set: Vec<String>,
}

#[derive(Args, Debug, Clone)]
pub struct OrbitOpts {
    /// Which designated orbit of the system to use.
    #[arg(long, default_value_t = 0)]
    pub orbit: usize,
    /// Initial point, comma separated (a single manifold coordinate for manifold orbits).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub x0: Option<Vec<f64>>,
    /// Iteration cap.
    #[arg(long)]
    pub max_n: Option<usize>,
    /// Convergence radius around the fixed point.
    #[arg(long)]
    pub delta: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct OutputOpts {
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DimArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub orbit: OrbitOpts,
    /// Number of log-spaced ε samples (at least 32).
    #[arg(long, default_value_t = 48)]
    pub eps_samples: usize,
    /// Write (epsilon, measure, method) rows here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputOpts,
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub orbit: OrbitOpts,
    /// Width of the neutral band around |λ| = 1 (maps) or Re λ = 0 (flows).
    #[arg(long, default_value_t = orbitdim::classify::DEFAULT_ETA)]
    pub eta: f64,
    /// Also run the projective-dimension detector on the designated orbit.
    #[arg(long)]
    pub fractal: bool,
    /// Detector threshold.
    #[arg(long, default_value_t = orbitdim::classify::DEFAULT_THETA)]
    pub theta: f64,
    #[arg(long, default_value_t = 48)]
    pub eps_samples: usize,
    #[command(flatten)]
    pub output: OutputOpts,
}

#[derive(Args, Debug)]
pub struct ManifoldArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Series order K (2..=5); defaults to the system's declaration or 3.
    #[arg(long)]
    pub order: Option<usize>,
    /// Check the solver against the closed-form quadratic-saddle coefficients
    /// on this many random draws.
    #[arg(long)]
    pub draws: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputOpts,
}

#[derive(Args, Debug)]
pub struct OrbitArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub orbit: OrbitOpts,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CatalogArgs {
    /// Print this entry's definition file.
    #[arg(long)]
    pub show: Option<String>,
}

/// Exit code for a failure: 2 input/IO, 3 mathematical refusal, 4 internal.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<orbitdim::Error>() {
        Some(e) if e.is_input() => 2,
        Some(e) if e.is_internal() => 4,
        Some(_) => 3,
        None => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Dim(a) => commands::dim(a),
        Command::Classify(a) => commands::classify(a),
        Command::Manifold(a) => commands::manifold(a),
        Command::Orbit(a) => commands::orbit(a),
        Command::Catalog(a) => commands::catalog(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
