//! Wall-clock comparison of the batched swarm and the per-particle loop.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use swarmforge::{derive_seed, run_dppso_reference, run_dtpso, Benchmark, BenchmarkId, HyperMatrix};

use crate::output::{resolve_dir, Outputs};
use crate::{thread_pool, CommonArgs};

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScaleArgs {
    /// Total particle count, split evenly over the groups.
    #[arg(long, default_value_t = 16384, value_parser = clap::value_parser!(u64).range(1..))]
    pub particles: u64,
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..))]
    pub groups: u64,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub dim: u64,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub iters: u64,
    #[arg(long, default_value = "BF1")]
    pub problem: BenchmarkId,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub repeats: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleRow {
    pub problem: BenchmarkId,
    pub repeat: u64,
    pub seed: u64,
    pub groups: u64,
    pub particles_per_group: u64,
    pub dim: u64,
    pub iterations: u64,
    pub tensor_seconds: f64,
    pub oracle_seconds: f64,
    pub time_ratio: f64,
    /// Both implementations produced bit-identical best-fitness traces.
    pub traces_match: bool,
    pub final_fitness: f64,
}

pub const TIMING_FIELDS: [&str; 3] = ["tensor_seconds", "oracle_seconds", "time_ratio"];

/// Rough peak footprint: positions, velocities and personal bests, in both
/// runs' worst case.
pub fn estimated_bytes(particles: u64, dim: u64) -> u64 {
    3 * particles * dim * 8
}

fn available_bytes() -> Option<u64> {
    let text = std::fs::read_to_string("/proc/meminfo").ok()?;
    let line = text.lines().find(|l| l.starts_with("MemAvailable:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

/// Times one repeat of both implementations on the same seed.
pub fn measure(args: &ScaleArgs, repeat: u64) -> Result<ScaleRow> {
    let per_group = args.particles / args.groups;
    let defaults = HyperMatrix::diversified_default();
    let hypers = if args.groups as usize == defaults.groups() {
        defaults
    } else {
        HyperMatrix::uniform(*defaults.row(0), args.groups as usize)?
    };
    let bench = Benchmark::with_dim(args.problem, args.dim as usize);
    let seed = derive_seed(args.seed, "repeat", repeat);
    let iters = args.iters as usize;
    let tensor = run_dtpso(&bench, &hypers, per_group as usize, iters, seed)?;
    let oracle = run_dppso_reference(&bench, &hypers, per_group as usize, iters, seed)?;
    Ok(ScaleRow {
        problem: args.problem,
        repeat,
        seed,
        groups: args.groups,
        particles_per_group: per_group,
        dim: args.dim,
        iterations: args.iters,
        tensor_seconds: tensor.wall_seconds,
        oracle_seconds: oracle.wall_seconds,
        time_ratio: tensor.wall_seconds / oracle.wall_seconds,
        traces_match: tensor.trace == oracle.trace && tensor.final_point == oracle.final_point,
        final_fitness: tensor.final_fitness,
    })
}

pub fn run(args: &ScaleArgs) -> Result<PathBuf> {
    if !args.particles.is_multiple_of(args.groups) {
        bail!(
            "--particles ({}) must be a multiple of --groups ({})",
            args.particles,
            args.groups
        );
    }
    let need = estimated_bytes(args.particles, args.dim);
    if let Some(have) = available_bytes() {
        if need > have {
            bail!(
                "a {}x{} swarm needs about {} MiB but only {} MiB is available; lower --particles or --dim",
                args.particles,
                args.dim,
                need >> 20,
                have >> 20
            );
        }
    }
    let pool = thread_pool(args.common.jobs)?;
    let mut out = Outputs::create(resolve_dir(args.common.out.as_deref(), "scale"))?;
    let rows = pool.install(|| (0..args.repeats).map(|r| measure(args, r)).collect::<Result<Vec<_>>>())?;
    for row in &rows {
        println!(
            "repeat {}: tensor {:.3}s oracle {:.3}s ratio {:.3} traces_match {}",
            row.repeat, row.tensor_seconds, row.oracle_seconds, row.time_ratio, row.traces_match
        );
    }
    out.csv("scale.csv", &rows)?;
    out.json("scale.json", &rows)?;
    let seeds: BTreeMap<String, u64> = std::iter::once(("root".to_string(), args.seed))
        .chain(rows.iter().map(|r| (format!("repeat_{}", r.repeat), r.seed)))
        .collect();
    out.finish("scale", serde_json::to_value(args)?, seeds, &TIMING_FIELDS)
}
