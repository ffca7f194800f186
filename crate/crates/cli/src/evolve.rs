//! Hyper-parameter evolution for a benchmark or the planning problem.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::Result;
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use swarmforge::simenv::generate_world;
use swarmforge::{
    derive_seed, evolve, Benchmark, BenchmarkId, EvolutionReport, FitnessProblem, HyperMatrix, InnerBudget,
    OuterBudget, PathProblem, PlannerConfig, ScenarioConfig, SeedPolicy,
};

use crate::output::{resolve_dir, Outputs};
use crate::{load_json, thread_pool, CommonArgs};

/// A benchmark id or `path` for the planning problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum EvolveTarget {
    Benchmark(BenchmarkId),
    Path,
}

impl fmt::Display for EvolveTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvolveTarget::Benchmark(id) => write!(f, "{}", id.code()),
            EvolveTarget::Path => f.write_str("path"),
        }
    }
}

impl FromStr for EvolveTarget {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("path") {
            return Ok(EvolveTarget::Path);
        }
        s.parse::<BenchmarkId>()
            .map(EvolveTarget::Benchmark)
            .map_err(|_| format!("unknown problem '{s}', expected BF1, BF2, BF3, BF4 or path"))
    }
}

impl From<EvolveTarget> for String {
    fn from(t: EvolveTarget) -> Self {
        t.to_string()
    }
}

impl TryFrom<String> for EvolveTarget {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeedPolicyArg {
    Fresh,
    Fixed,
}

impl From<SeedPolicyArg> for SeedPolicy {
    fn from(p: SeedPolicyArg) -> Self {
        match p {
            SeedPolicyArg::Fresh => SeedPolicy::FreshPerEvaluation,
            SeedPolicyArg::Fixed => SeedPolicy::Fixed,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvolveArgs {
    #[arg(long)]
    pub problem: EvolveTarget,
    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
    pub evolutions: u64,
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..))]
    pub outer_groups: u64,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub outer_particles: u64,
    /// Groups of the inner swarm, which is also the evolved matrix's row count.
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..))]
    pub inner_groups: u64,
    /// Particles per inner group. Defaults to 10, or 170 for `path`.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub inner_particles: Option<u64>,
    /// Inner iterations. Defaults to 1400, or 30 for `path`.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub inner_iters: Option<u64>,
    #[arg(long, value_enum, default_value_t = SeedPolicyArg::Fresh)]
    pub seed_policy: SeedPolicyArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Scenario file for `path`; the evolved problem is its first frame.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Planner file for `path`, supplying waypoints and penalty terms.
    #[arg(long)]
    pub planner: Option<PathBuf>,
    #[command(flatten)]
    #[serde(skip)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct EvolutionRow {
    evolution: usize,
    best_lfv: Option<f64>,
    evolution_best: Option<f64>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// Outer swarm hypers: the diversified defaults, or their first row repeated
/// when a different group count is requested.
fn outer_hypers(groups: usize) -> Result<HyperMatrix> {
    let defaults = HyperMatrix::diversified_default();
    if groups == defaults.groups() {
        Ok(defaults)
    } else {
        Ok(HyperMatrix::uniform(*defaults.row(0), groups)?)
    }
}

pub fn run(args: &EvolveArgs) -> Result<PathBuf> {
    let is_path = args.problem == EvolveTarget::Path;
    let inner = InnerBudget {
        groups: args.inner_groups as usize,
        particles: args.inner_particles.unwrap_or(if is_path { 170 } else { 10 }) as usize,
        iterations: args.inner_iters.unwrap_or(if is_path { 30 } else { 1400 }) as usize,
    };
    let outer = OuterBudget {
        groups: args.outer_groups as usize,
        particles: args.outer_particles as usize,
        evolutions: args.evolutions as usize,
    };
    let policy: SeedPolicy = args.seed_policy.into();
    let hypers = outer_hypers(outer.groups)?;

    let mut config = serde_json::to_value(args)?;
    let mut seeds = BTreeMap::from([
        ("root".to_string(), args.seed),
        ("outer".to_string(), derive_seed(args.seed, "outer", 0)),
    ]);
    let problem: Box<dyn FitnessProblem> = match args.problem {
        EvolveTarget::Benchmark(id) => Box::new(Benchmark::standard(id)),
        EvolveTarget::Path => {
            let scenario: ScenarioConfig = match &args.scenario {
                Some(p) => load_json(p, "scenario file")?,
                None => ScenarioConfig::default(),
            };
            let planner: PlannerConfig = match &args.planner {
                Some(p) => load_json(p, "planner file")?,
                None => PlannerConfig::default(),
            };
            planner.validate()?;
            let world = generate_world(&scenario, scenario.seed)?;
            seeds.insert("scenario".to_string(), scenario.seed);
            config["scenario_config"] = serde_json::to_value(&scenario)?;
            config["planner_config"] = serde_json::to_value(&planner)?;
            Box::new(PathProblem::new(
                &world,
                planner.waypoints,
                planner.alpha,
                planner.beta,
            )?)
        }
    };

    let pool = thread_pool(args.common.jobs)?;
    let report: EvolutionReport =
        pool.install(|| evolve(problem.as_ref(), &hypers, outer, inner, args.seed, policy))?;

    let mut out = Outputs::create(resolve_dir(args.common.out.as_deref(), "evolve"))?;
    out.text("hypers.json", &(report.hyper_file().to_json() + "\n"))?;
    out.json("evolution.json", &report)?;
    out.csv(
        "evolution.csv",
        report
            .best_lfv_trace
            .iter()
            .zip(&report.evolution_best_trace)
            .enumerate()
            .map(|(i, (b, e))| EvolutionRow {
                evolution: i + 1,
                best_lfv: finite(*b),
                evolution_best: finite(*e),
            }),
    )?;
    match report.best_lfv {
        Some(v) => println!("best LFV {v:.6e} after {} evolutions", report.evolutions),
        None => println!("no finite LFV after {} evolutions", report.evolutions),
    }
    config["outer_hyper_matrix"] = serde_json::to_value(&hypers)?;
    config["inner_budget"] = serde_json::to_value(inner)?;
    out.finish("evolve", config, seeds, &[])
}
