//! Batch front end: kernel reports, minimization runs and diagnostic
//! suites driven by a JSON config.
//!
//! Exit codes: 0 success, 1 config error, 2 the mathematics does not apply
//! (non-confining kernel, domain error), 3 a diagnostic failed.

mod commands;
mod config;

use clap::{Parser, Subcommand};
use commands::{Failure, Run};
use config::RunConfig;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "equimeasure",
    version,
    about = "Minimizers of attractive-repulsive interaction energies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's `output`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Solver and sampling seed (overrides `solver.seed`).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the kernel hypotheses and write hypothesis_report.json.
    KernelReport(Common),
    /// Solve on the configured grid; writes solution.csv, potential.csv and report.json.
    Minimize(Common),
    /// Run the diagnostic list on a stored or freshly solved measure; writes manifest.json.
    Verify(Common),
}

fn prepare(c: &Common) -> Result<Run, Failure> {
    let mut config = RunConfig::load(&c.config).map_err(|e| Failure::Config(format!("{e:#}")))?;
    if let Some(seed) = c.seed {
        config.solver.seed = seed;
    }
    let out = c
        .out
        .clone()
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let base = c.config.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Run { config, base, out })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let (common, cmd): (&Common, fn(&Run) -> commands::Outcome) = match &cli.command {
        Command::KernelReport(c) => (c, commands::kernel_report),
        Command::Minimize(c) => (c, commands::minimize),
        Command::Verify(c) => (c, commands::verify),
    };
    match prepare(common).and_then(|run| cmd(&run)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}
