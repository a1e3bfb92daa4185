//! `gtdyn`: build kernels, evolve measures, sample trajectories and run the
//! verification suite from a JSON run configuration.

use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;

use commands::Outcome;
use config::{Overrides, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "gtdyn", version, about = "Markov dynamics on signatures and Gelfand-Tsetlin patterns")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    #[command(flatten)]
    opts: Overrides,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Cmd {
    /// Generator and transition matrices on a box
    Gen,
    /// Link matrix from level N to level N-1
    Link,
    /// Boundary measure on level-N signatures
    Boundary,
    /// Level-N measure (q²-Schur measure when q < 1)
    Measure,
    /// Evolve a measure to the requested times
    Evolve,
    /// Sample level-N trajectories (JSON lines)
    Sample,
    /// Sample multilevel pattern trajectories (JSON lines)
    GtSample,
    /// Down kernel by the Toeplitz and product routes
    Toeplitz,
    /// Run the acceptance checks and write a JSON report
    Verify,
}

fn run(cli: &Cli) -> gtdyn::Result<Outcome> {
    let cfg = RunConfig::resolve(&cli.opts)?;
    if let Some(w) = cfg.workers()? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| gtdyn::Error::Resource(format!("cannot start {w} workers: {e}")))?;
    }
    match cli.cmd {
        Cmd::Gen => commands::gen(&cfg),
        Cmd::Link => commands::link(&cfg),
        Cmd::Boundary => commands::boundary(&cfg),
        Cmd::Measure => commands::measure(&cfg),
        Cmd::Evolve => commands::evolve(&cfg),
        Cmd::Sample => commands::sample(&cfg),
        Cmd::GtSample => commands::gt_sample(&cfg),
        Cmd::Toeplitz => commands::toeplitz(&cfg),
        Cmd::Verify => commands::verify(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
