//! Command-line front end for the chaos Galerkin solver. Three subcommands
//! share one TOML configuration schema and one artifact convention: CSV plus
//! a manifest in the output directory, errors on stderr as a single
//! `error[kind]: message` line, exit 0 on success, 1 on configuration or
//! usage problems, 2 on numerical failure.

mod commands;
mod config;
mod manifest;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable files, schema violations: exit code 1.
    Config(String),
    /// The mathematics failed, configuration was fine: exit code 2.
    Numerical(String),
}

impl From<chaos_fem::Error> for CliError {
    fn from(e: chaos_fem::Error) -> Self {
        use chaos_fem::Error as E;
        let message = config::one_line(&e.to_string());
        match e {
            E::InvalidArgument(_) | E::Parse { .. } | E::UnsupportedBasis(_) | E::Io(_) => {
                CliError::Config(message)
            }
            E::Assembly { .. } | E::Evaluation(_) | E::Numerical(_) | E::Solver(_) => {
                CliError::Numerical(message)
            }
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "chaos-fem",
    version,
    about = "Chaos Galerkin solver for a 1D elliptic problem with random coefficients"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one chaos Galerkin system and write the coefficient fields
    Solve(CommonArgs),
    /// Sweep degrees, sample counts, and seeds into error tables
    Table(CommonArgs),
    /// Run Monte Carlo, collocation, and the chaos solve on one problem
    Compare(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML configuration file; defaults apply when omitted
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Random seed; repeat it to give `table` several seeds
    #[arg(long, value_name = "INT")]
    pub seed: Vec<u64>,

    /// CSV of sample rows to use instead of drawing them (`solve` only)
    #[arg(long, value_name = "PATH")]
    pub samples_file: Option<PathBuf>,

    /// Directory the CSV, SVG, and manifest artifacts are written to
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,

    /// Rebuild per-sample matrices on the fly instead of storing them
    #[arg(long)]
    pub low_memory: bool,

    /// Override a configuration key, e.g. --set solve.degree=3
    #[arg(long, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) =>
        {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("error[config]: {}", config::one_line(&e.to_string()));
            return ExitCode::from(1);
        }
    };
    let result = match &cli.command {
        Command::Solve(args) => commands::solve(args),
        Command::Table(args) => commands::table(args),
        Command::Compare(args) => commands::compare(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(message)) => {
            eprintln!("error[config]: {message}");
            ExitCode::from(1)
        }
        Err(CliError::Numerical(message)) => {
            eprintln!("error[numerical]: {message}");
            ExitCode::from(2)
        }
    }
}
