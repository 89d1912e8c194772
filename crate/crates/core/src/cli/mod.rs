//! Command-line front end: `solve | wannier | scan | winding | propagate`.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 1 for I/O problems while writing artifacts.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

pub use config::{ConfigError, RunConfig};

pub const EXIT_IO: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

/// Builtin observable tokens accepted by `--observable` and `dynamics.perturbation`.
pub fn builtin_names() -> &'static [&'static str] {
    &["hamiltonian", "translation", "identity", "none"]
}

#[derive(Debug, Parser)]
#[command(name = "bloch-lab", version, about = "Bloch states, Wannier projectors and selection rules on a periodic ring")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct CommonArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (overrides `output_dir` in the config).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve Bloch bands and check basis invariants.
    Solve(CommonArgs),
    /// Build one Wannier state and its projector diagnostics.
    Wannier {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 0)]
        band: usize,
        #[arg(long, default_value_t = 0)]
        site: usize,
    },
    /// Scan matrix elements of an observable across the Bloch basis.
    Scan {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        observable: String,
    },
    /// Winding numbers of Bloch states, optionally after applying an observable.
    Winding {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        observable: Option<String>,
        #[arg(long)]
        band: Option<usize>,
    },
    /// Short-time transition amplitudes for `H + R`.
    Propagate(CommonArgs),
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(crate::Error),
    Io(std::io::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numerical(e) => write!(f, "numerical failure: {e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::Numerical(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

fn load(common: &CommonArgs) -> Result<(RunConfig, PathBuf), CliError> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    let dir = cfg.output_dir.clone();
    Ok((cfg, dir))
}

pub fn execute(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    match cli.command {
        Command::Solve(common) => {
            let (cfg, dir) = load(&common)?;
            commands::cmd_solve(&cfg, &dir)
        }
        Command::Wannier { common, band, site } => {
            let (cfg, dir) = load(&common)?;
            commands::cmd_wannier(&cfg, &dir, band, site)
        }
        Command::Scan { common, observable } => {
            let (cfg, dir) = load(&common)?;
            commands::cmd_scan(&cfg, &dir, &observable)
        }
        Command::Winding {
            common,
            observable,
            band,
        } => {
            let (cfg, dir) = load(&common)?;
            commands::cmd_winding(&cfg, &dir, observable.as_deref(), band)
        }
        Command::Propagate(common) => {
            let (cfg, dir) = load(&common)?;
            commands::cmd_propagate(&cfg, &dir)
        }
    }
}

/// Parses arguments, runs the command and maps failures to exit codes.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    match execute(cli) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
