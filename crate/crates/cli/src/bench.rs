//! Repeated optimizer trials on the benchmark functions.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use swarmforge::{
    derive_seed, run_dppso_reference, run_dtpso, run_pso_reference, Benchmark, BenchmarkId, HyperMatrix, PsoParams,
    RunReport,
};

use crate::output::{resolve_dir, Outputs};
use crate::{load_hypers, thread_pool, CommonArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Pso,
    Dppso,
    Dtpso,
    Sepso,
}

impl Algorithm {
    fn name(self) -> &'static str {
        match self {
            Algorithm::Pso => "pso",
            Algorithm::Dppso => "dppso",
            Algorithm::Dtpso => "dtpso",
            Algorithm::Sepso => "sepso",
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BenchArgs {
    /// Benchmark ids, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "BF1,BF2,BF3,BF4")]
    pub problem: Vec<BenchmarkId>,
    #[arg(long, value_enum, default_value_t = Algorithm::Dtpso)]
    pub algo: Algorithm,
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    #[arg(long, default_value_t = 1400, value_parser = clap::value_parser!(u64).range(1..))]
    pub iters: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Particle groups (the single-swarm baseline uses groups × particles particles).
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..))]
    pub groups: u64,
    /// Particles per group.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub particles: u64,
    /// Evolved hyper-parameters, required for `--algo sepso`.
    #[arg(long)]
    pub hypers: Option<PathBuf>,
    #[command(flatten)]
    #[serde(skip)]
    pub common: CommonArgs,
}

/// One trial's best-fitness trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub problem: BenchmarkId,
    pub algo: Algorithm,
    pub trial: u64,
    pub seed: u64,
    pub final_fitness: f64,
    pub evaluations: u64,
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub problem: BenchmarkId,
    pub algo: Algorithm,
    pub trial: u64,
    pub iteration: usize,
    pub best_fitness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub problem: BenchmarkId,
    pub algo: Algorithm,
    pub trials: u64,
    pub iterations: u64,
    pub particles: u64,
    pub median_final: f64,
    pub min_final: f64,
    pub max_final: f64,
    pub mean_final: f64,
    pub mean_wall_seconds: f64,
    pub total_wall_seconds: f64,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn summarize(problem: BenchmarkId, args: &BenchArgs, particles: u64, runs: &[(TrialRecord, f64)]) -> BenchSummary {
    let finals: Vec<f64> = runs.iter().map(|(r, _)| r.final_fitness).collect();
    let total: f64 = runs.iter().map(|(_, s)| s).sum();
    BenchSummary {
        problem,
        algo: args.algo,
        trials: args.trials,
        iterations: args.iters,
        particles,
        median_final: median(&finals),
        min_final: finals.iter().copied().fold(f64::INFINITY, f64::min),
        max_final: finals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean_final: finals.iter().sum::<f64>() / finals.len() as f64,
        mean_wall_seconds: total / runs.len() as f64,
        total_wall_seconds: total,
    }
}

pub fn run(args: &BenchArgs) -> Result<PathBuf> {
    let hypers = match (args.algo, &args.hypers) {
        (Algorithm::Sepso, None) => bail!(
            "--algo sepso needs evolved hyper-parameters: run `swarmforge evolve --problem <id> --out <dir>` \
             and pass `--hypers <dir>/hypers.json`"
        ),
        (Algorithm::Sepso, Some(path)) => load_hypers(path)?,
        (_, Some(_)) => bail!("--hypers only applies to --algo sepso"),
        (Algorithm::Dtpso | Algorithm::Dppso, None) if args.groups != 8 => {
            bail!("the built-in diversified hyper-parameters have 8 groups; pass --groups 8")
        }
        (_, None) => HyperMatrix::diversified_default(),
    };
    let particles_total = match args.algo {
        Algorithm::Pso => args.groups * args.particles,
        _ => hypers.groups() as u64 * args.particles,
    };
    let pool = thread_pool(args.common.jobs)?;
    let mut out = Outputs::create(resolve_dir(args.common.out.as_deref(), "bench"))?;

    let mut records = Vec::new();
    let mut summaries = Vec::new();
    for &problem in &args.problem {
        let bench = Benchmark::standard(problem);
        let runs: Vec<(TrialRecord, f64)> = pool.install(|| {
            (0..args.trials)
                .into_par_iter()
                .map(|trial| {
                    let seed = derive_seed(args.seed, "trial", trial);
                    let iters = args.iters as usize;
                    let report: RunReport = match args.algo {
                        Algorithm::Pso => {
                            run_pso_reference(&bench, &PsoParams::default(), particles_total as usize, iters, seed)?
                        }
                        Algorithm::Dppso => run_dppso_reference(&bench, &hypers, args.particles as usize, iters, seed)?,
                        Algorithm::Dtpso | Algorithm::Sepso => {
                            run_dtpso(&bench, &hypers, args.particles as usize, iters, seed)?
                        }
                    };
                    let record = TrialRecord {
                        problem,
                        algo: args.algo,
                        trial,
                        seed,
                        final_fitness: report.final_fitness,
                        evaluations: report.evaluations,
                        trace: report.trace,
                    };
                    Ok((record, report.wall_seconds))
                })
                .collect::<swarmforge::Result<Vec<_>>>()
        })?;
        summaries.push(summarize(problem, args, particles_total, &runs));
        records.extend(runs.into_iter().map(|(r, _)| r));
    }

    out.jsonl("traces.jsonl", &records)?;
    out.csv(
        "traces.csv",
        records.iter().flat_map(|r| {
            r.trace.iter().enumerate().map(move |(i, f)| TraceRow {
                problem: r.problem,
                algo: r.algo,
                trial: r.trial,
                iteration: i + 1,
                best_fitness: *f,
            })
        }),
    )?;
    out.csv("summary.csv", &summaries)?;
    out.json("summary.json", &summaries)?;

    let seeds: BTreeMap<String, u64> = std::iter::once(("root".to_string(), args.seed))
        .chain((0..args.trials).map(|t| (format!("trial_{t}"), derive_seed(args.seed, "trial", t))))
        .collect();
    let mut config = serde_json::to_value(args)?;
    config["algo_name"] = args.algo.name().into();
    config["hyper_matrix"] = serde_json::to_value(&hypers)?;
    out.finish("bench", config, seeds, &["mean_wall_seconds", "total_wall_seconds"])
}
