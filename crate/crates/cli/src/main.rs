//! `halfspace`: command-line driver for the image-charge solvers.
//!
//! Exit codes: 0 success, 2 numerical failure (non-convergence, failed sweep
//! rows, singular fits), 3 invalid input or usage, 4 I/O failure.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use halfspace_core::model::Vec3;
use halfspace_core::ErrorKind;

use output::Format;

#[derive(Debug, Parser)]
#[command(
    name = "halfspace",
    version,
    about = "Atoms and molecules in front of a conducting or dielectric plate"
)]
#[command(allow_negative_numbers = true)]
pub struct Cli {
    /// `key = value` configuration file; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Output file. Defaults to `$HALFSPACE_OUT_DIR/<command>.<ext>` when the
    /// variable is set, otherwise standard output.
    #[arg(long, global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One-dimensional electron bound to the plate by its own image.
    #[command(allow_negative_numbers = true)]
    Eplate(EplateArgs),
    /// Single hydrogen/plate ground-state solve with the threshold gap.
    #[command(allow_negative_numbers = true)]
    Hydrogen(HydrogenArgs),
    /// Interaction energy W(r) over a list of plate distances.
    #[command(allow_negative_numbers = true)]
    Sweep(SweepArgs),
    /// Power-law fit of W(r) read from a CSV file.
    #[command(allow_negative_numbers = true)]
    Fit(FitArgs),
    /// Leading van der Waals coefficient C(v) of a molecule.
    #[command(allow_negative_numbers = true)]
    Cv(CvArgs),
    /// Helium product-state energy and binding verdicts.
    Helium,
    /// Feshbach fixed point versus dense eigenvalues on random matrices.
    #[command(allow_negative_numbers = true)]
    FeshbachDemo(FeshbachArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Relative residual tolerance of the eigensolver.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Budget of operator applications.
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Seed of the random starting vector.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Axial spacing (adjusted so that the nucleus sits between nodes).
    #[arg(long)]
    pub h_xi: Option<f64>,
    #[arg(long)]
    pub h_rho: Option<f64>,
    /// Axial extent beyond the nucleus.
    #[arg(long = "L-xi")]
    pub l_xi: Option<f64>,
    /// Radial extent.
    #[arg(long = "L-rho")]
    pub l_rho: Option<f64>,
    /// Axial cells per `L_xi`; alternative to `--h-xi`.
    #[arg(long)]
    pub n_xi: Option<usize>,
    #[arg(long)]
    pub n_rho: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EplateArgs {
    /// Interior nodes of the coarse grid.
    #[arg(long)]
    pub n: Option<usize>,
    /// Length of the half-line box.
    #[arg(long = "L")]
    pub l: Option<f64>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct HydrogenArgs {
    /// Distance from the nucleus to the plate.
    #[arg(long)]
    pub r: Option<f64>,
    /// Reflection coefficient, 1 for a perfect conductor.
    #[arg(long)]
    pub m: Option<f64>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Strictly increasing plate distances.
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    pub r_values: Vec<f64>,
    #[arg(long)]
    pub m: Option<f64>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Also fit the converged rows.
    #[arg(long)]
    pub fit: bool,
    #[arg(long, value_delimiter = ',', default_values_t = [3, 5])]
    pub exponents: Vec<i32>,
    /// Fit only rows with `lo <= r <= hi`.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub window: Option<Vec<f64>>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV with columns `r` and `W`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [3, 5])]
    pub exponents: Vec<i32>,
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub window: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MoleculeName {
    Hydrogen,
    Helium,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[arg(long, value_enum, default_value_t = MoleculeName::Hydrogen)]
    pub molecule: MoleculeName,
    /// Unit plate normal, `x,y,z`.
    #[arg(long, value_parser = parse_v)]
    pub v: Option<Vec3>,
    /// Distances at which to tabulate the prediction `-C(v)/r³`.
    #[arg(long, value_delimiter = ',')]
    pub r_values: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct FeshbachArgs {
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Matrix dimension.
    #[arg(long, default_value_t = 50)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Size of the noise added to the ground vector spanning `Ran P`.
    #[arg(long, default_value_t = 0.1)]
    pub perturbation: f64,
}

fn parse_v(s: &str) -> Result<Vec3, String> {
    halfspace_core::config::parse_vec3(s).ok_or_else(|| format!("expected `x,y,z`, got {s:?}"))
}

pub(crate) const EXIT_NUMERICAL: u8 = 2;
const EXIT_INPUT: u8 = 3;
const EXIT_IO: u8 = 4;

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Numerical => EXIT_NUMERICAL,
        ErrorKind::Input => EXIT_INPUT,
        ErrorKind::Io => EXIT_IO,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { 0 });
        }
    };
    match commands::run(&cli) {
        Ok(outcome) => ExitCode::from(outcome),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.kind()))
        }
    }
}
