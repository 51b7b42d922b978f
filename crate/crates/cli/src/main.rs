//! `balayage-lab`: scenario runner and fixture generator.
//!
//! Exit codes: 0 all residuals within tolerance, 1 verification failure,
//! 2 configuration or I/O error, 3 numeric fault.

mod config;
mod fixtures;
mod report;
mod scenarios;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::config::{Config, Resolver};
use crate::report::{write_csv, Report};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Core(balayage_core::Error),
}

impl From<balayage_core::Error> for CliError {
    fn from(e: balayage_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use balayage_core::Error as E;
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Core(E::InfinityClash | E::WosRestartOverflow { .. }) => 3,
            CliError::Core(E::PremiseFailed(_) | E::HypothesisViolated(_) | E::NotRelativelyCompact) => 1,
            CliError::Core(_) => 2,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "balayage-lab",
    version,
    about = "Numerical checks for balayage and Poisson–Jensen identities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config and write a JSON report.
    Run {
        config: PathBuf,
        /// Report path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Also write the residual table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Record wall time. Reports are then no longer byte-reproducible.
        #[arg(long)]
        timing: bool,
    },
    /// Write a seeded fixture file into a directory.
    Fixture {
        kind: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Run {
            config,
            out,
            seed,
            csv,
            timing,
        } => run(config, out, seed, csv, timing),
        Command::Fixture { kind, seed, out } => fixtures::make_fixture(&kind, seed, &out).map(|p| {
            println!("{}", p.display());
            0
        }),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("balayage-lab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(
    path: PathBuf,
    out: Option<PathBuf>,
    seed: Option<u64>,
    csv: Option<PathBuf>,
    timing: bool,
) -> Result<u8, CliError> {
    let start = Instant::now();
    let (mut config, mut raw) = Config::load(&path)?;
    if let Some(s) = seed {
        config.seed = s;
        raw["seed"] = s.into();
    }
    let resolver = Resolver::new(&path);
    let outcome = scenarios::run(&config, &resolver)?;
    if outcome.residuals.is_empty() {
        return Err(CliError::Config("scenario evaluated no residuals".into()));
    }
    let passed = outcome.passed();
    let report = Report {
        kind: serde_json::to_value(config.kind)
            .ok()
            .and_then(|v| v.as_str().map(String::from))
            .unwrap_or_default(),
        seed: config.seed,
        config: raw,
        residuals: outcome.residuals,
        verdict: if passed { "pass" } else { "fail" },
        details: serde_json::Value::Object(outcome.details),
        warnings: outcome.warnings,
        wall_time_s: timing.then(|| start.elapsed().as_secs_f64()),
    };
    let mut text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    match &out {
        Some(p) => std::fs::write(p, &text).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?,
        None => print!("{text}"),
    }
    if let Some(p) = &csv {
        write_csv(p, &report.residuals)?;
    }
    if !passed {
        for r in report.residuals.iter().filter(|r| !r.pass) {
            eprintln!("FAIL {}: {} > {}", r.name, r.value, r.tolerance);
        }
    }
    Ok(if passed { 0 } else { 1 })
}
