//! `mfsub`: command-line front end.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "mfsub", version, about = "Oscillation-based multifractal analysis and time-change factorization")]
pub struct Cli {
    /// Output file, or directory for commands that write several files.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format; `generate` defaults to json, everything else to csv.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Seed for random generators.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Fixed-point tolerance for self-similar functions.
    #[arg(long, global = true, default_value_t = 1e-12)]
    pub tol: f64,
    /// Worker threads; 1 runs everything sequentially.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample a function family on a b-adic grid.
    Generate(GenerateArgs),
    /// Oscillation pyramid of a sampled function, or the exact Z_a pyramid.
    Pyramid(PyramidArgs),
    /// Per-level exponents, intrinsic exponent and optionally ν.
    Exponent(ExponentArgs),
    /// Per-block exponents and homogeneity verdicts.
    Homogeneity(HomogeneityArgs),
    /// Factor Z = g ∘ f.
    Decompose(DecomposeArgs),
    /// Theoretical or coarse singularity spectra.
    Spectrum(SpectrumArgs),
    /// Run the built-in fixture suite.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Weierstrass,
    Brownian,
    Selfsimilar,
    Multinomial,
    Za,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub family: Family,
    #[arg(long)]
    pub depth: u32,
    /// Grid base (Weierstrass and self-similar families).
    #[arg(long, default_value_t = 2)]
    pub base: u32,
    /// Weierstrass exponent.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Weierstrass frequency ratio.
    #[arg(long, default_value_t = 2.0)]
    pub bw: f64,
    #[arg(long, value_enum, default_value_t = PhaseArg::Sin)]
    pub phase: PhaseArg,
    #[arg(long)]
    pub n_terms: Option<usize>,
    /// Z_a parameter; values in (0, 1/2] give the trinomial integral.
    #[arg(long)]
    pub a: Option<f64>,
    /// Multinomial weights, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    /// JSON file describing a self-similar system.
    #[arg(long)]
    pub system: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PhaseArg {
    Sin,
    Cos,
}

/// Where the analysed function or pyramid comes from.
#[derive(Args, Debug)]
pub struct Source {
    /// Function file (JSON).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Pyramid file (CSV `j,k,omega`).
    #[arg(long)]
    pub pyramid: Option<PathBuf>,
    /// Use the exact Z_a pyramid with this parameter.
    #[arg(long)]
    pub za_exact: Option<f64>,
    /// Depth of the exact pyramid.
    #[arg(long)]
    pub depth: Option<u32>,
    /// Replace zero cell oscillations by this floor instead of failing.
    #[arg(long, num_args = 0..=1, default_missing_value = "1e-300")]
    pub clamp_zeros: Option<f64>,
}

#[derive(Args, Debug)]
pub struct PyramidArgs {
    #[command(flatten)]
    pub source: Source,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    TailMin,
    Mean,
}

#[derive(Args, Debug)]
pub struct ExponentArgs {
    #[command(flatten)]
    pub source: Source,
    /// Level window `lo:hi`; defaults to all levels.
    #[arg(long)]
    pub window: Option<String>,
    #[arg(long, value_enum, default_value_t = ModeArg::TailMin)]
    pub mode: ModeArg,
    /// Also evaluate ν on this p grid (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub nu: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
pub struct HomogeneityArgs {
    #[command(flatten)]
    pub source: Source,
    /// Coarse level whose cells are the blocks.
    #[arg(long)]
    pub level: u32,
    /// Relative levels `lo:hi` inside each block.
    #[arg(long)]
    pub j_range: String,
    #[arg(long, default_value_t = mfsub::exponents::DEFAULT_HOMOGENEITY_THRESHOLD)]
    pub threshold: f64,
}

#[derive(Args, Debug)]
pub struct DecomposeArgs {
    #[command(flatten)]
    pub source: Source,
    /// `auto` or a comma-separated list of stage levels.
    #[arg(long, default_value = "auto")]
    pub schedule: String,
    #[arg(long, default_value_t = mfsub::subordination::DecompositionSchedule::DEFAULT_ETA)]
    pub eta: f64,
    #[arg(long, default_value_t = mfsub::subordination::DecompositionSchedule::DEFAULT_START)]
    pub start: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SpectrumKind {
    Measure,
    Za,
    Subordinated,
    Coarse,
}

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    #[arg(long, value_enum)]
    pub kind: SpectrumKind,
    /// Cascade weights (measure, subordinated).
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    /// Z_a parameter (za).
    #[arg(long)]
    pub a: Option<f64>,
    /// Exponent of the monofractal factor (subordinated).
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long, default_value_t = mfsub::spectra::DEFAULT_POINTS)]
    pub points: usize,
    #[command(flatten)]
    pub source: Source,
    /// Level window `lo:hi` (coarse).
    #[arg(long)]
    pub window: Option<String>,
    /// Exponent range `lo:hi` for the bins (coarse).
    #[arg(long)]
    pub range: Option<String>,
    #[arg(long, default_value_t = 13)]
    pub bins: usize,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Number of Brownian paths (seeds `seed..seed + n`).
    #[arg(long, default_value_t = 20)]
    pub brownian_paths: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
