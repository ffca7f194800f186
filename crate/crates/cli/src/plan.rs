//! The dynamic planning scenario.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;
use rayon::prelude::*;
use serde::Serialize;
use swarmforge::render::frame_svg;
use swarmforge::simenv::{generate_world, run_scenario_with};
use swarmforge::{derive_seed, PlanSetup, PlannerConfig, ScenarioConfig, SimMetrics, Variant};

use crate::output::{resolve_dir, Outputs};
use crate::{load_hypers, load_json, thread_pool, CommonArgs};

#[derive(Debug, Clone, Args, Serialize)]
pub struct PlanArgs {
    /// Planner variants, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "sepso")]
    pub variant: Vec<Variant>,
    /// Frame count; overrides the scenario file.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub frames: Option<u64>,
    /// Scenario seed; overrides the scenario file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Evolved hypers for the sepso variants. Defaults to the built-in
    /// path-planning matrix.
    #[arg(long)]
    pub hypers: Option<PathBuf>,
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long)]
    pub planner: Option<PathBuf>,
    /// Write an SVG every this many frames; 0 disables snapshots.
    #[arg(long, default_value_t = 10)]
    pub svg_stride: u64,
    /// Keep the truncation window across frames.
    #[arg(long)]
    pub window_carryover: bool,
    #[command(flatten)]
    #[serde(skip)]
    pub common: CommonArgs,
}

pub const TIMING_FIELDS: [&str; 3] = ["time_per_frame_seconds", "mean_wall_seconds", "wall_seconds"];

struct VariantRun {
    metrics: SimMetrics,
    svgs: Vec<(usize, String)>,
}

/// Resolves the scenario and planner: flags over files over defaults.
pub fn resolve_configs(args: &PlanArgs) -> Result<(ScenarioConfig, PlannerConfig)> {
    let mut scenario: ScenarioConfig = match &args.scenario {
        Some(p) => load_json(p, "scenario file")?,
        None => ScenarioConfig::default(),
    };
    if let Some(frames) = args.frames {
        scenario.frames = frames as usize;
    }
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    if scenario.frames == 0 {
        bail!("the scenario needs at least one frame");
    }
    scenario.validate()?;
    let mut planner: PlannerConfig = match &args.planner {
        Some(p) => load_json(p, "planner file")?,
        None => PlannerConfig::default(),
    };
    if args.window_carryover {
        planner.window_carryover = true;
    }
    planner.validate()?;
    Ok((scenario, planner))
}

fn run_variant(scenario: &ScenarioConfig, variant: Variant, setup: &PlanSetup, stride: usize) -> Result<VariantRun> {
    let mut svgs = Vec::new();
    let metrics = run_scenario_with(scenario, variant, setup, |frame, world, record| {
        if stride > 0 && frame % stride == 0 {
            svgs.push((frame, frame_svg(world, Some(record), frame)));
        }
        Ok(())
    })?;
    Ok(VariantRun { metrics, svgs })
}

pub fn run(args: &PlanArgs) -> Result<PathBuf> {
    if args.variant.is_empty() {
        bail!("--variant needs at least one planner variant");
    }
    if args.hypers.is_some() && !args.variant.iter().any(|v| v.uses_evolved_hypers()) {
        bail!("--hypers only applies to the sepso, sepso-noat and sepso-nopi variants");
    }
    let (scenario, planner) = resolve_configs(args)?;
    let mut setup = PlanSetup {
        planner: planner.clone(),
        ..PlanSetup::default()
    };
    if let Some(path) = &args.hypers {
        setup.evolved = load_hypers(path)?;
    }
    // Fail on an unusable scenario before spending time on any variant.
    let initial = generate_world(&scenario, scenario.seed)?;

    let pool = thread_pool(args.common.jobs)?;
    let stride = args.svg_stride as usize;
    let runs: Vec<VariantRun> = pool.install(|| {
        args.variant
            .par_iter()
            .map(|&v| run_variant(&scenario, v, &setup, stride))
            .collect::<Result<Vec<_>>>()
    })?;

    let mut out = Outputs::create(resolve_dir(args.common.out.as_deref(), "plan"))?;
    let summaries: Vec<_> = runs.iter().map(|r| r.metrics.summary()).collect();
    for s in &summaries {
        println!(
            "{:<11} length {:.1} iterations {:.1} time {:.1} ms collision-free {:.2}",
            s.variant,
            s.path_length,
            s.iterations_per_frame,
            s.time_per_frame_seconds * 1e3,
            s.collision_free_fraction
        );
    }
    out.csv("metrics.csv", &summaries)?;
    out.json("metrics.json", &summaries)?;
    for run in &runs {
        let name = run.metrics.variant.name();
        out.jsonl(&format!("records_{name}.jsonl"), &run.metrics.records)?;
        for (frame, svg) in &run.svgs {
            out.text(&format!("frames/{name}/frame_{frame:04}.svg"), svg)?;
        }
    }
    out.text("scenario.json", &(serde_json::to_string_pretty(&scenario)? + "\n"))?;
    out.text("planner.json", &(serde_json::to_string_pretty(&planner)? + "\n"))?;
    out.text("world_0000.json", &(initial.to_json() + "\n"))?;

    let seeds: BTreeMap<String, u64> = [
        ("scenario".to_string(), scenario.seed),
        ("world".to_string(), derive_seed(scenario.seed, "world", 0)),
        ("swarm_frame_0".to_string(), derive_seed(scenario.seed, "swarm", 0)),
    ]
    .into_iter()
    .collect();
    let mut config = serde_json::to_value(args)?;
    config["scenario_config"] = serde_json::to_value(&scenario)?;
    config["planner_config"] = serde_json::to_value(&planner)?;
    config["evolved_hypers"] = serde_json::to_value(&setup.evolved)?;
    config["baseline_hypers"] = serde_json::to_value(&setup.baseline)?;
    config["pso_params"] = serde_json::to_value(setup.pso)?;
    out.finish("plan", config, seeds, &TIMING_FIELDS)
}
