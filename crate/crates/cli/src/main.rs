//! `ctsdf`: signed distance fields, phase densities and morphometry from
//! two-phase volumes.
//!
//! Exit codes: 0 success, 1 usage, 2 I/O, 3 numerical failure.

mod commands;
mod config;
mod error;
mod provenance;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Context;
use crate::config::FileConfig;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "ctsdf",
    version,
    about = "High-order signed distance fields for two-phase volumes"
)]
struct Cli {
    /// File of `key = value` settings; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample an analytic phantom as a distance or density volume.
    Phantom(commands::PhantomArgs),
    /// Density volume to implicit surface ψ and signed distance φ.
    Embed(commands::EmbedArgs),
    /// Re-extend a field from the values on its own narrowband.
    Sweep(commands::SweepArgs),
    /// Estimate the two phase densities from ρ and φ.
    Phases(commands::PhasesArgs),
    /// Volume, area, curvature and bone indices of {φ < 0}.
    Morpho(commands::MorphoArgs),
    /// Extract a level set as a PLY mesh.
    Mesh(commands::MeshArgs),
    /// Grid-refinement error study on an analytic phantom.
    Verify(commands::VerifyArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let threads = cli.threads.map(usize::from).or(file.threads);
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Usage("threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    let ctx = Context { file, threads };
    match cli.command {
        Command::Phantom(a) => commands::phantom(a, &ctx),
        Command::Embed(a) => commands::embed(a, &ctx),
        Command::Sweep(a) => commands::sweep(a, &ctx),
        Command::Phases(a) => commands::phases(a, &ctx),
        Command::Morpho(a) => commands::morpho(a, &ctx),
        Command::Mesh(a) => commands::mesh(a, &ctx),
        Command::Verify(a) => commands::verify(a, &ctx),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ctsdf: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
