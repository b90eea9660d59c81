//! Command-line front end for `qarray`.
//!
//! `qarray <boundstate|coupling|evolve|validate> [--config FILE] [--preset NAME]
//! [--out DIR] [--set key=value]...` writes deterministic CSV files into the
//! output directory. Exit codes: 0 success, 1 usage, 2 parameter or physics
//! error, 3 validation failure.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod presets;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

pub use commands::Report;
pub use config::RunConfig;
pub use error::CliError;

pub const THREADS_ENV: &str = "QARRAY_THREADS";

#[derive(Debug, Parser)]
#[command(name = "qarray", version, about = "Bound states and photon-mediated atom-atom coupling in a driven cavity array")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bound-state profile and summary (boundstate.csv, boundstate_summary.csv).
    Boundstate(RunArgs),
    /// Atom-atom coupling and cooperativity over r and d (coupling.csv).
    Coupling(RunArgs),
    /// Two-atom dynamics (trajectory_<engine>.csv, evolve_summary.csv).
    Evolve(RunArgs),
    /// Full driven model against the squeezed-frame model (deviation.csv).
    Validate(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Flat key = value config file.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Built-in parameter set, applied before the config file.
    #[arg(long, value_name = "NAME")]
    pub preset: Option<String>,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    /// Override one key; repeatable, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// validate: report even when the regime check or deviation limit fails.
    #[arg(long)]
    pub force: bool,
}

impl RunArgs {
    pub fn load(&self) -> Result<RunConfig, CliError> {
        if self.config.is_none() && self.preset.is_none() {
            return Err(CliError::usage("give --config FILE, --preset NAME, or both"));
        }
        let file = match &self.config {
            Some(path) => Some((
                path.display().to_string(),
                std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?,
            )),
            None => None,
        };
        let file_ref = file.as_ref().map(|(s, t)| (s.as_str(), t.as_str()));
        RunConfig::load(self.preset.as_deref(), file_ref, &self.set)
    }
}

/// Sizes the global worker pool from `QARRAY_THREADS`, if set.
pub fn configure_threads(value: Option<&str>) -> Result<Option<usize>, CliError> {
    let Some(v) = value else { return Ok(None) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| CliError::usage(format!("{THREADS_ENV}={v}: expected a positive integer")))?;
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(Some(n))
}

pub fn run(cli: &Cli) -> Result<Report, CliError> {
    let (args, name) = match &cli.command {
        Command::Boundstate(a) => (a, "boundstate"),
        Command::Coupling(a) => (a, "coupling"),
        Command::Evolve(a) => (a, "evolve"),
        Command::Validate(a) => (a, "validate"),
    };
    if args.force && name != "validate" {
        return Err(CliError::usage("--force only applies to validate"));
    }
    let cfg = args.load()?;
    std::fs::create_dir_all(&args.out)?;
    match &cli.command {
        Command::Boundstate(_) => commands::boundstate(&cfg, &args.out),
        Command::Coupling(_) => commands::coupling(&cfg, &args.out),
        Command::Evolve(_) => commands::evolve(&cfg, &args.out),
        Command::Validate(a) => commands::validate(&cfg, &args.out, a.force),
    }
}

/// Parses arguments, runs, reports, and maps the outcome to an exit code.
pub fn main_with<I, T>(args: I, threads: Option<&str>) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = configure_threads(threads).and_then(|_| run(&cli));
    match result {
        Ok(report) => {
            for note in &report.notes {
                eprintln!("note: {note}");
            }
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
