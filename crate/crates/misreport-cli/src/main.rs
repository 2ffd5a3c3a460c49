//! Command-line front end for the misreport library.
//!
//! Four subcommands cover the workflow: `bounds` tabulates identified
//! intervals for the latent choice probability, `estimate` runs the
//! moment-inequality set estimator with an MLE comparison column,
//! `simulate` benchmarks both estimators on synthetic designs, and
//! `verify` replays the internal consistency battery.
//!
//! Exit codes: 0 on success, 1 for configuration problems, 2 for data
//! problems, 3 when verification detects a violation.

mod commands;
mod config;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

/// A terminal failure carrying the process exit code.
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }

    pub fn verification(message: impl Into<String>) -> Self {
        Failure { code: 3, message: message.into() }
    }
}

impl From<misreport::Error> for Failure {
    fn from(e: misreport::Error) -> Self {
        let code = match &e {
            misreport::Error::Data(_) => 2,
            _ => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

#[derive(Parser)]
#[command(name = "misreport", version, about = "Partial identification for misreported binary choice")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate bounds on the latent choice probability per covariate cell.
    Bounds(RunArgs),
    /// Estimate the identified set for the choice-model coefficients.
    Estimate(RunArgs),
    /// Benchmark the set estimator against the misreporting MLE.
    Simulate(RunArgs),
    /// Run the internal consistency battery.
    Verify(VerifyArgs),
}

#[derive(clap::Args)]
pub struct RunArgs {
    /// TOML configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Override the data path from the configuration.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Override the output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override the random seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the worker thread count.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(clap::Args)]
pub struct VerifyArgs {
    /// Optional TOML configuration file; the battery runs without one.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Which scenario to verify.
    #[arg(long, value_enum, default_value_t = Scenario::Default)]
    pub scenario: Scenario,
    /// Override the data path from the configuration.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Override the output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override the random seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the worker thread count.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scenario {
    /// Worked examples, population checks, and witness reconstruction.
    Default,
    /// A data-generating process whose misreporting grows with W.
    MonotonicityViolation,
}

fn init_threads(threads: Option<usize>) -> Result<(), Failure> {
    let Some(n) = threads else { return Ok(()) };
    if n == 0 {
        return Err(Failure::config("thread count must be positive"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::config(format!("cannot size the thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Bounds(args) => {
            let resolved = config::load(&args)?;
            init_threads(resolved.threads)?;
            commands::bounds(&resolved)
        }
        Command::Estimate(args) => {
            let resolved = config::load(&args)?;
            init_threads(resolved.threads)?;
            commands::estimate(&resolved)
        }
        Command::Simulate(args) => {
            let resolved = config::load(&args)?;
            init_threads(resolved.threads)?;
            commands::simulate(&resolved)
        }
        Command::Verify(args) => {
            let scenario = args.scenario;
            let run_args = RunArgs {
                config: args.config.clone().unwrap_or_default(),
                data: args.data,
                out: args.out,
                seed: args.seed,
                threads: args.threads,
            };
            let resolved = if args.config.is_some() {
                config::load(&run_args)?
            } else {
                config::resolve(Default::default(), PathBuf::from("."), &run_args)?
            };
            init_threads(resolved.threads)?;
            commands::verify(&resolved, scenario)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
