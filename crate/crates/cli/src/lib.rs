//! Command-line entry points. Each subcommand writes its artifacts and a
//! `manifest.json` into one output directory.

pub mod bench;
pub mod evolve;
pub mod output;
pub mod plan;
pub mod scale;

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use swarmforge::{HyperFile, HyperMatrix};

#[derive(Debug, Parser)]
#[command(
    name = "swarmforge",
    version,
    about = "Grouped tensor particle swarms, hyper-parameter evolution and dynamic path planning"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run repeated trials of an optimizer on the benchmark functions.
    Bench(bench::BenchArgs),
    /// Time the batched swarm against the per-particle loop at large scale.
    Scale(scale::ScaleArgs),
    /// Evolve a hyper-parameter matrix for a benchmark or the planning problem.
    Evolve(evolve::EvolveArgs),
    /// Run the dynamic planning scenario for one or more planner variants.
    Plan(plan::PlanArgs),
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Output directory. Defaults to `$SWARMFORGE_OUT/<subcommand>`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for trial- and particle-level fan-out.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub jobs: u64,
}

pub fn run(cli: Cli) -> Result<()> {
    let dir = match cli.command {
        Command::Bench(args) => bench::run(&args)?,
        Command::Scale(args) => scale::run(&args)?,
        Command::Evolve(args) => evolve::run(&args)?,
        Command::Plan(args) => plan::run(&args)?,
    };
    println!("wrote {}", dir.display());
    Ok(())
}

pub(crate) fn thread_pool(jobs: u64) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs as usize)
        .build()
        .context("cannot start worker threads")
}

/// Loads a hyper-parameter file written by `evolve`, or a bare list of rows.
pub fn load_hypers(path: &Path) -> Result<HyperMatrix> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read hypers file {}", path.display()))?;
    if let Ok(file) = HyperFile::from_json(&text) {
        return Ok(file.groups);
    }
    serde_json::from_str::<HyperMatrix>(&text).with_context(|| {
        format!(
            "{} is neither an evolve output nor a list of hyper rows",
            path.display()
        )
    })
}

pub(crate) fn load_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {what} {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("malformed {what} {}", path.display()))
}
