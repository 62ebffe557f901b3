//! `frenetfold`: angles, gauges, relaxation, fitting and Monte Carlo for Cα
//! traces from the command line.
//!
//! Exit status: 0 success, 1 usage error, 2 bad input, 3 numerical failure.

mod commands;
mod config;

use clap::{Args, Parser, Subcommand, ValueEnum};
use frenetfold::dynamics::DynamicsError;
use frenetfold::energy::EnergyError;
use frenetfold::geometry::GeometryError;
use frenetfold::io::{IoError, PdbError};
use frenetfold::soliton::SolitonError;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use std::process::ExitCode;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Input(String),
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Input(m) | CliError::Numerical(m) => m,
        }
    }
}

impl From<SolitonError> for CliError {
    fn from(e: SolitonError) -> Self {
        match e {
            SolitonError::Diverged { .. } | SolitonError::FitDiverged(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

macro_rules! input_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Input(e.to_string())
            }
        }
    )*};
}

input_error!(GeometryError, EnergyError, DynamicsError, IoError, PdbError);

#[derive(Parser)]
#[command(name = "frenetfold", version, about = "Discrete Frenet analysis, soliton fitting and Monte Carlo for protein Cα traces")]
struct Cli {
    /// TOML file supplying any flag; flags on the command line win
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bond and torsion angles of a PDB chain as CSV
    Angles(AnglesArgs),
    /// Gauge-unfold a profile and report its flattening points
    Gauge(GaugeArgs),
    /// Rebuild a Cα trace (PDB) from a profile
    Reconstruct(ReconstructArgs),
    /// Relax a bond-angle profile to a soliton fixed point
    Relax(RelaxArgs),
    /// Train segment couplings against a PDB fragment
    Fit(FitArgs),
    /// Glauber Monte Carlo under a temperature schedule
    Simulate(SimulateArgs),
    /// Radius of gyration over chain lengths and temperatures, with ν fits
    ThetaScan(ThetaScanArgs),
}

/// Where the structure comes from.
#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct InputArgs {
    /// PDB file
    #[arg(long)]
    pub pdb: Option<PathBuf>,
    /// Chain identifier (first chain when absent)
    #[arg(long)]
    pub chain: Option<char>,
    /// Zero-based MODEL index
    #[arg(long)]
    pub model: Option<usize>,
    /// Fragment index after splitting at chain breaks (longest when absent)
    #[arg(long)]
    pub fragment: Option<usize>,
    /// Inclusive residue-number range, e.g. 3-42
    #[arg(long)]
    pub residues: Option<String>,
    /// Angle profile (.csv or .json) instead of a PDB file
    #[arg(long)]
    pub profile: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct AnglesArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    /// Output CSV (stdout when absent)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct GaugeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    /// Torsions above this magnitude are irregular, rad
    #[arg(long)]
    pub tau_threshold: Option<f64>,
    /// Sign changes at most this many sites apart form a cluster
    #[arg(long)]
    pub cluster_span: Option<usize>,
    /// Output CSV of the unfolded profile (stdout when absent)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct ReconstructArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    /// Output PDB (stdout when absent)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct RelaxArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    /// Energy parameters (TOML, uniform or segmented)
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Step size of the fixed-point iteration
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Residual (max-norm) at which to stop
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Use Newton steps instead of the fixed-point iteration
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub newton: Option<bool>,
    /// Bond length of the output profile, Å
    #[arg(long)]
    pub bond_length: Option<f64>,
    /// Output CSV (stdout when absent)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct FitArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    /// Starting segment couplings (TOML); seeded from the target when absent
    #[arg(long)]
    pub segments: Option<PathBuf>,
    /// Residual tolerance of each inner relaxation
    #[arg(long)]
    pub tol: Option<f64>,
    /// Levenberg–Marquardt iterations
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Gauge-unfold the target before fitting
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub unfold: Option<bool>,
    /// Segment seeding: bond-angle jump that starts a segment, rad
    #[arg(long)]
    pub kappa_tol: Option<f64>,
    /// Segment seeding: torsion jump that starts a segment, rad
    #[arg(long)]
    pub tau_tol: Option<f64>,
    /// Segment seeding: λ of every seeded segment
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Output prefix: writes PREFIX.toml, PREFIX.pdb and PREFIX.csv
    /// (parameters to stdout when absent)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryArg {
    Open,
    Soliton,
}

impl From<BoundaryArg> for frenetfold::Boundary {
    fn from(b: BoundaryArg) -> Self {
        match b {
            BoundaryArg::Open => frenetfold::Boundary::Open,
            BoundaryArg::Soliton => frenetfold::Boundary::Soliton,
        }
    }
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    /// Energy parameters (TOML, uniform or segmented)
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Stages `steps@kT,...` or `geom:FROM:TO:STAGES:STEPS`
    #[arg(long)]
    pub schedule: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Independent runs with seeds seed, seed+1, ...
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub measure_every: Option<usize>,
    #[arg(long)]
    pub sigma_kappa: Option<f64>,
    #[arg(long)]
    pub sigma_tau: Option<f64>,
    /// Move bond angles only, with torsions at τ[κ]
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub kappa_only: Option<bool>,
    #[arg(long, value_enum)]
    pub boundary: Option<BoundaryArg>,
    /// Trajectory CSV (stdout when absent). With several runs `{seed}` is
    /// replaced by the seed, or `.seedN` is inserted before the extension.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Final profile CSV of each run, named like --out
    #[arg(long)]
    pub final_profile: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct ThetaScanArgs {
    /// Uniform energy parameters (TOML)
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Temperatures, comma-separated
    #[arg(long, value_delimiter = ',')]
    pub kts: Option<Vec<f64>>,
    /// Chain lengths (vertices), comma-separated
    #[arg(long, value_delimiter = ',')]
    pub lengths: Option<Vec<usize>>,
    /// Steps per run
    #[arg(long)]
    pub steps: Option<usize>,
    /// Runs per (length, kT)
    #[arg(long)]
    pub replicas: Option<usize>,
    /// Leading fraction of each run discarded
    #[arg(long)]
    pub burn_in: Option<f64>,
    #[arg(long)]
    pub measure_every: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub boundary: Option<BoundaryArg>,
    /// Output CSV (stdout when absent)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = cli.config.as_deref().map(config::read_config).transpose()?;
    let config = config.as_ref();
    match cli.command {
        Command::Angles(a) => commands::angles(config::merge(&a, config, "angles")?),
        Command::Gauge(a) => commands::gauge(config::merge(&a, config, "gauge")?),
        Command::Reconstruct(a) => commands::reconstruct_cmd(config::merge(&a, config, "reconstruct")?),
        Command::Relax(a) => commands::relax_cmd(config::merge(&a, config, "relax")?),
        Command::Fit(a) => commands::fit(config::merge(&a, config, "fit")?),
        Command::Simulate(a) => commands::simulate(config::merge(&a, config, "simulate")?),
        Command::ThetaScan(a) => commands::theta_scan(config::merge(&a, config, "theta-scan")?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
