//! `helixseek` command-line front end.
//!
//! Exit codes: 0 success, 2 user or configuration error, 3 numerical abort
//! or regression failure.

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

pub mod commands;
pub mod files;
pub mod manifest;
pub mod svg;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USER: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Bundled fig2 configuration (l0 = 200).
pub const FIG2_CONFIG: &str = include_str!("../configs/fig2.json");
/// Bundled planar ascent-law configuration (l0 = 200).
pub const PLANAR_CONFIG: &str = include_str!("../configs/planar.json");

#[derive(Debug, Parser)]
#[command(name = "helixseek", version, about = "Helical klinotaxis simulations and checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one closed-loop simulation.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `noise.seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a parameter grid.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// JSON file: {"parameters": [{"path": "filter.sigma1", "values": [..]}]}
        #[arg(long)]
        sweep: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        parallelism: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Analyze a trajectory CSV.
    Analyze {
        /// Config the trajectory was produced with.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long, value_enum)]
        kind: AnalysisKind,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the bundled fig2 configuration and emit the figure data.
    ReproduceFig2 {
        #[arg(long)]
        out: PathBuf,
        /// Zero the axial spin and its gain (motion confined to a plane).
        #[arg(long)]
        planar: bool,
        #[arg(long)]
        flip_omega_perp_1: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AnalysisKind {
    Ascent,
    Alignment,
    QuasiSteady,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad input, configuration, or an unwritable output location.
    User(String),
    /// Numerical abort or a failed regression gate.
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::User(_) => EXIT_USER,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::User(m) | CliError::Numeric(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { config, out, seed } => commands::simulate(&config, &out, seed),
        Command::Sweep {
            config,
            sweep,
            out,
            parallelism,
            seed,
        } => commands::sweep(&config, &sweep, &out, parallelism, seed),
        Command::Analyze {
            config,
            trajectory,
            kind,
            out,
        } => commands::analyze(&config, &trajectory, kind, &out),
        Command::ReproduceFig2 {
            out,
            planar,
            flip_omega_perp_1,
        } => commands::reproduce_fig2(&out, planar, flip_omega_perp_1),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Errors go to stderr.
pub fn run_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USER } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
