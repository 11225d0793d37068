//! `branchlink` command line: transport bounds, linking numbers and Hopf
//! invariants with machine-readable output.

mod commands;
mod fieldspec;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Parser, Serialize)]
#[command(name = "branchlink", version, about = "Branched transport bounds, linked curves and Hopf invariants")]
pub struct Cli {
    /// Worker threads for parallel sections (0 = all cores). Output does
    /// not depend on it, so it is left out of the echoed config.
    #[arg(long, global = true, default_value_t = 0)]
    #[serde(skip)]
    pub threads: usize,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Linking number of two curve files, or of the spaghetton sheaves.
    Linking(LinkingArgs),
    /// Hopf invariant of a sphere-valued field.
    Hopf(HopfArgs),
    /// Geometry, energies and gradient bound of a spaghetton field.
    Spaghetton(SpaghettonArgs),
    /// Upper and lower bounds for connecting a point set to the boundary.
    Solve(SolveArgs),
    /// Scaling table over uniform grids (CSV).
    GridScaling(GridScalingArgs),
    /// The four-dimensional singularity lattice experiment (CSV).
    Singularities(SingularitiesArgs),
    /// Partial sums of the radius/degree budget series (CSV).
    Budget(BudgetArgs),
    /// Checks a transport graph file.
    ValidateGraph(ValidateArgs),
}

#[derive(Args, Serialize)]
pub struct LinkingArgs {
    /// Two curve files `{"closed":true,"vertices":[[x,y,z],...]}`.
    pub curves: Vec<PathBuf>,
    /// Use the two sheaves of level `k` instead of files.
    #[arg(long)]
    pub spaghetton: Option<usize>,
}

#[derive(Args, Serialize)]
pub struct HopfArgs {
    /// hopfmap | stadium[:rho] | linked-stadia[:rho] | spaghetton:k | gadget:r,rho
    #[arg(long)]
    pub field: String,
    #[arg(long, value_enum, default_value = "preimage")]
    pub method: Method,
    /// Lattice resolution (default 128 for preimage, 96 for whitehead).
    #[arg(long)]
    pub res: Option<usize>,
}

#[derive(clap::ValueEnum, Clone, Copy, Serialize, PartialEq)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Preimage,
    Whitehead,
}

#[derive(Args, Serialize)]
pub struct SpaghettonArgs {
    #[arg(long)]
    pub k: usize,
    /// Tube radius (default 1/(4k)).
    #[arg(long)]
    pub rho: Option<f64>,
    /// Energy lattice resolution.
    #[arg(long, default_value_t = 128)]
    pub res: usize,
    /// Also count preimage linking at this resolution.
    #[arg(long)]
    pub hopf: bool,
}

#[derive(Args, Serialize)]
pub struct SolveArgs {
    /// JSON list of points (unit box) or `{"points": [...], "domain": {...}}`.
    #[arg(long, conflicts_with_all = ["grid", "charged"])]
    pub points: Option<PathBuf>,
    /// Uniform grid `m,k` in the unit cube.
    #[arg(long, conflicts_with = "charged")]
    pub grid: Option<String>,
    /// Charged configuration file.
    #[arg(long)]
    pub charged: Option<PathBuf>,
    #[arg(long, conflicts_with = "model")]
    pub alpha: Option<f64>,
    /// Cost model: `alpha:A`, `nu3` or `nu2:Cnu=C`.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Perturbation rounds of the local search.
    #[arg(long, default_value_t = 200)]
    pub iterations: usize,
    #[arg(long, default_value_t = 1)]
    pub restarts: usize,
    /// Also run the exact lattice oracle at this resolution (at most three
    /// sources, dimension at most two, sources on lattice nodes).
    #[arg(long)]
    pub res: Option<usize>,
}

#[derive(Args, Serialize)]
pub struct GridScalingArgs {
    #[arg(long, default_value_t = 2)]
    pub m: u32,
    #[arg(long, conflicts_with = "model")]
    pub alpha: Option<f64>,
    /// Power-law model `alpha:A` (the only family with a scaling normalization).
    #[arg(long)]
    pub model: Option<String>,
    /// Comma-separated increasing grid sizes.
    #[arg(long, default_value = "2,4,8,16,32")]
    pub ks: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub iterations: usize,
    /// JSON instead of CSV.
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Serialize)]
pub struct SingularitiesArgs {
    #[arg(long, default_value = "1,2,3,4")]
    pub ks: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub iterations: usize,
}

#[derive(Args, Serialize)]
pub struct BudgetArgs {
    #[arg(long = "N", default_value_t = 1_000_000)]
    pub n: u64,
}

#[derive(Args, Serialize)]
pub struct ValidateArgs {
    pub graph: PathBuf,
    /// Report the cost under this exponent.
    #[arg(long, conflicts_with = "model")]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub model: Option<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
