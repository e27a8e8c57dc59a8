//! Batch front end: `fwdrep <norms|flow|solve|kernel|verify> CONFIG`.

pub mod commands;
pub mod config;
pub mod report;
pub mod verify;

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::Error;
use config::RunConfig;
use report::{write_outcome, Outcome};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_BREACH: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "fwdrep",
    version,
    about = "Forward equations through stochastic flows in Hermite-Sobolev spaces"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct CommonArgs {
    /// TOML run configuration.
    pub config: PathBuf,
    /// Directory for report.json, summary.csv and data files.
    #[arg(short, long, default_value = "fwdrep-out")]
    pub out: PathBuf,
    /// Exit with status 1 when any tolerance is breached.
    #[arg(long)]
    pub assert: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Delta norms by the Hermite series and by Mehler's formula.
    Norms(CommonArgs),
    /// Simulate flows; trajectory dump plus composition and inverse checks.
    Flow(CommonArgs),
    /// Solve the forward equation by Monte Carlo and/or Galerkin.
    Solve(CommonArgs),
    /// Estimate a transition kernel.
    Kernel(CommonArgs),
    /// Run the property suites.
    Verify(CommonArgs),
}

impl Command {
    fn args(&self) -> &CommonArgs {
        match self {
            Command::Norms(a) | Command::Flow(a) | Command::Solve(a) | Command::Kernel(a) | Command::Verify(a) => a,
        }
    }
}

fn exit_code_for(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_CONFIG
    }
}

fn dispatch(command: &Command, cfg: &RunConfig) -> crate::Result<Outcome> {
    match command {
        Command::Norms(_) => commands::cmd_norms(cfg),
        Command::Flow(_) => commands::cmd_flow(cfg),
        Command::Solve(_) => commands::cmd_solve(cfg),
        Command::Kernel(_) => commands::cmd_kernel(cfg),
        Command::Verify(_) => verify::cmd_verify(cfg),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
        }
    };
    let args = cli.command.args();
    let text = match fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.config.display());
            return EXIT_CONFIG;
        }
    };
    let outcome = RunConfig::parse(&text).and_then(|cfg| dispatch(&cli.command, &cfg));
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code_for(&e);
        }
    };
    match write_outcome(&args.out, &outcome, &text) {
        Ok(path) => eprintln!("wrote {}", path.display()),
        Err(e) => {
            eprintln!("error: writing reports: {e}");
            return EXIT_CONFIG;
        }
    }
    for row in &outcome.summary {
        println!(
            "{:<14} {} value={:.6e} threshold={:.6e}",
            row.status, row.item, row.value, row.threshold
        );
    }
    if args.assert && !outcome.breaches().is_empty() {
        EXIT_BREACH
    } else {
        EXIT_PASS
    }
}
