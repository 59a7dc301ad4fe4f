//! Batch front end: `spinmer <command> --config run.toml --out DIR`.
//!
//! Exit codes: 0 success, 2 usage, 3 config, 4 input parse, 5 solver, 6 i/o.
//! Failures print one line `error kind=<kind> code=<n> message="..."` on
//! stderr.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

use std::ffi::OsString;
use std::num::NonZeroUsize;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub use config::{parse_config, RunConfig};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "spinmer", version, about = "Local spin analysis of exact model spectra")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, created if needed.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Both)]
    pub format: Format,
    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    pub threads: Option<NonZeroUsize>,
    /// Degeneracy tolerance for spin labelling, cm⁻¹ (overrides the config).
    #[arg(long = "tol-degeneracy", global = true)]
    pub tol_degeneracy: Option<f64>,
    #[arg(long, short, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Eigenvalues with spin multiplicities.
    Spectrum,
    /// Spectrum plus joint local-spin weights of every state.
    Project,
    /// Term energies of a dⁿ ion versus Dq/B.
    TsDiagram,
    /// Two lowest quintets of the spinmerism model across a parameter range.
    Sweep,
    /// Exchange constant fitted to the lowest singlet and triplet.
    Heisenberg,
    /// The determinant basis of the configured sector.
    DumpBasis,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Project => "project",
            Command::TsDiagram => "ts-diagram",
            Command::Sweep => "sweep",
            Command::Heisenberg => "heisenberg",
            Command::DumpBasis => "dump-basis",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Both,
}

impl Format {
    pub fn csv(self) -> bool {
        self != Format::Json
    }

    pub fn json(self) -> bool {
        self != Format::Csv
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit status.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            let err = CliError::Usage(first.trim_start_matches("error: ").to_string());
            eprintln!("{}", err.line());
            return err.exit_code();
        }
    };
    match run(&cli) {
        Ok(files) => {
            if cli.verbose {
                for f in files {
                    eprintln!("wrote {}", f.display());
                }
            }
            0
        }
        Err(err) => {
            eprintln!("{}", err.line());
            err.exit_code()
        }
    }
}

/// Runs a parsed invocation, returning the files written.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    if let Some(t) = cli.tol_degeneracy {
        if !(t.is_finite() && t > 0.0) {
            return Err(CliError::Usage(format!("--tol-degeneracy must be positive, got {t}")));
        }
    }
    let work = || commands::execute(cli);
    match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.get())
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start {n} threads: {e}")))?
            .install(work),
        None => work(),
    }
}
