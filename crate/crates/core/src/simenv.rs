//! Seeded dynamic scenario: moving rectangles bouncing inside a square map,
//! a moving start and target, and a frame loop that plans then steps.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{decode_path, Obstacle, ObstacleKind, PathProblem, Point2, PolygonWorld};
use crate::planner::{PlanRecord, Planner, PlannerConfig, StopReason};
use crate::rng::{derive_seed, RngStream};
use crate::runner::{run_dppso_reference, run_pso_reference, PsoParams, RunReport};
use crate::swarm::HyperMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub width: f64,
    pub height: f64,
    pub dynamic_obstacles: usize,
    pub static_obstacles: usize,
    /// Upper end of the dynamic obstacle speed range `(0, max]`, cm/s.
    pub max_obstacle_speed: f64,
    /// Vertical speed of the start point, cm/s.
    pub start_speed: f64,
    /// Vertical speed of the target point, cm/s.
    pub target_speed: f64,
    pub min_side: f64,
    pub max_side: f64,
    /// Width of the left and right bands holding start and target, cm.
    pub endpoint_band: f64,
    /// Free margin kept around start and target when placing obstacles, cm.
    pub clearance: f64,
    pub frames: usize,
    pub seed: u64,
    /// Seconds per frame.
    pub dt: f64,
    pub placement_attempts: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            width: 366.0,
            height: 366.0,
            dynamic_obstacles: 6,
            static_obstacles: 2,
            max_obstacle_speed: 5.0,
            start_speed: 3.0,
            target_speed: 8.0,
            min_side: 30.0,
            max_side: 80.0,
            endpoint_band: 40.0,
            clearance: 10.0,
            frames: 100,
            seed: 0,
            dt: 1.0,
            placement_attempts: 10_000,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(format!("scenario config: {msg}")));
        if !(self.width > 0.0 && self.height > 0.0) {
            return bad("map size must be positive");
        }
        if !(self.max_obstacle_speed > 0.0 && self.start_speed >= 0.0 && self.target_speed >= 0.0) {
            return bad("speeds must be non-negative and the obstacle range non-empty");
        }
        if !(0.0 < self.min_side && self.min_side <= self.max_side && self.max_side < self.width.min(self.height)) {
            return bad("obstacle sides must satisfy 0 < min <= max < map size");
        }
        if !(self.endpoint_band > 0.0 && 2.0 * self.endpoint_band < self.width) {
            return bad("endpoint band must fit twice across the map");
        }
        if self.frames == 0 {
            return bad("frames must be at least 1");
        }
        if !(self.dt > 0.0) {
            return bad("dt must be positive");
        }
        if self.placement_attempts == 0 {
            return bad("placement_attempts must be at least 1");
        }
        Ok(())
    }
}

fn rect_overlaps(a: (Point2, Point2), b: (Point2, Point2)) -> bool {
    a.0.x < b.1.x && b.0.x < a.1.x && a.0.y < b.1.y && b.0.y < a.1.y
}

/// Deterministic initial world for `seed`.
///
/// Start and target sit in the left and right bands of the map and move
/// vertically. Obstacles are axis-aligned rectangles placed without overlap
/// and kept clear of start and target; dynamic ones get a uniform random
/// heading and a speed in `(0, max]`.
pub fn generate_world(config: &ScenarioConfig, seed: u64) -> Result<PolygonWorld> {
    config.validate()?;
    let mut rng = RngStream::new(derive_seed(seed, "world", 0));
    let (w, h, band) = (config.width, config.height, config.endpoint_band);
    let start = Point2::new(rng.uniform_in(0.0, band), rng.uniform_in(0.0, h));
    let target = Point2::new(rng.uniform_in(w - band, w), rng.uniform_in(0.0, h));
    let sign = |u: f64| if u < 0.5 { 1.0 } else { -1.0 };
    let start_velocity = Point2::new(0.0, sign(rng.uniform()) * config.start_speed);
    let target_velocity = Point2::new(0.0, sign(rng.uniform()) * config.target_speed);

    let total = config.dynamic_obstacles + config.static_obstacles;
    let mut placed: Vec<(Point2, Point2)> = Vec::with_capacity(total);
    let mut obstacles = Vec::with_capacity(total);
    let mut attempts = 0;
    while obstacles.len() < total {
        if attempts == config.placement_attempts {
            return Err(Error::PlacementExhausted { attempts });
        }
        attempts += 1;
        let ow = rng.uniform_in(config.min_side, config.max_side);
        let oh = rng.uniform_in(config.min_side, config.max_side);
        let x = rng.uniform_in(0.0, w - ow);
        let y = rng.uniform_in(0.0, h - oh);
        let rect = (Point2::new(x, y), Point2::new(x + ow, y + oh));
        let grown = (
            rect.0.offset(-config.clearance, -config.clearance),
            rect.1.offset(config.clearance, config.clearance),
        );
        let blocks_endpoint = [start, target]
            .iter()
            .any(|p| rect_overlaps(grown, (*p, *p)) || within(grown, *p));
        if blocks_endpoint || placed.iter().any(|r| rect_overlaps(rect, *r)) {
            continue;
        }
        let dynamic = obstacles.len() < config.dynamic_obstacles;
        let velocity = if dynamic {
            let heading = rng.uniform_in(0.0, TAU);
            let speed = config.max_obstacle_speed * (1.0 - rng.uniform());
            Point2::new(speed * heading.cos(), speed * heading.sin())
        } else {
            Point2::default()
        };
        let kind = if dynamic {
            ObstacleKind::Dynamic
        } else {
            ObstacleKind::Static
        };
        placed.push(rect);
        obstacles.push(Obstacle::rectangle(x, y, ow, oh, velocity, kind)?);
    }

    let world = PolygonWorld {
        width: w,
        height: h,
        start,
        start_velocity,
        target,
        target_velocity,
        obstacles,
    };
    world.validate()?;
    Ok(world)
}

fn within(r: (Point2, Point2), p: Point2) -> bool {
    r.0.x <= p.x && p.x <= r.1.x && r.0.y <= p.y && p.y <= r.1.y
}

/// Shift that reflects the span `[lo, hi]` back inside `[0, limit]`, and
/// whether the velocity component must flip.
fn reflect(lo: f64, hi: f64, limit: f64, velocity: f64) -> (f64, bool) {
    if hi >= limit && velocity > 0.0 {
        (-2.0 * (hi - limit), true)
    } else if lo <= 0.0 && velocity < 0.0 {
        (-2.0 * lo, true)
    } else {
        (0.0, false)
    }
}

fn move_point(p: &mut Point2, v: &mut Point2, dt: f64, w: f64, h: f64) {
    *p = p.offset(v.x * dt, v.y * dt);
    let (sx, fx) = reflect(p.x, p.x, w, v.x);
    let (sy, fy) = reflect(p.y, p.y, h, v.y);
    *p = Point2::new((p.x + sx).clamp(0.0, w), (p.y + sy).clamp(0.0, h));
    if fx {
        v.x = -v.x;
    }
    if fy {
        v.y = -v.y;
    }
}

/// Advances every moving body by `velocity · dt`. A body that reaches or
/// crosses a border is mirrored back inside and the matching velocity
/// component is negated.
pub fn step_world(world: &PolygonWorld, dt: f64) -> Result<PolygonWorld> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    let mut next = world.clone();
    let (w, h) = (world.width, world.height);
    move_point(&mut next.start, &mut next.start_velocity, dt, w, h);
    move_point(&mut next.target, &mut next.target_velocity, dt, w, h);
    for o in &mut next.obstacles {
        if o.velocity == Point2::default() {
            continue;
        }
        o.translate(o.velocity.x * dt, o.velocity.y * dt);
        let (lo, hi) = o.extent();
        let (sx, fx) = reflect(lo.x, hi.x, w, o.velocity.x);
        let (sy, fy) = reflect(lo.y, hi.y, h, o.velocity.y);
        o.translate(sx, sy);
        // A step longer than the free space could still leave the map.
        let (lo, hi) = o.extent();
        o.translate(
            (-lo.x).max(0.0) - (hi.x - w).max(0.0),
            (-lo.y).max(0.0) - (hi.y - h).max(0.0),
        );
        if fx {
            o.velocity.x = -o.velocity.x;
        }
        if fy {
            o.velocity.y = -o.velocity.y;
        }
    }
    Ok(next)
}

/// World state after `frames` steps from the seeded initial world.
pub fn world_at(config: &ScenarioConfig, seed: u64, frames: usize) -> Result<PolygonWorld> {
    let mut world = generate_world(config, seed)?;
    for _ in 0..frames {
        world = step_world(&world, config.dt)?;
    }
    Ok(world)
}

/// Planner variants compared in the scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Evolved hypers with prior initialization and truncation.
    Sepso,
    /// As `Sepso` with a fixed iteration budget.
    SepsoNoAt,
    /// As `Sepso` without prior initialization.
    SepsoNoPi,
    Dtpso,
    Dppso,
    Pso,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::Sepso,
        Variant::SepsoNoAt,
        Variant::SepsoNoPi,
        Variant::Dtpso,
        Variant::Dppso,
        Variant::Pso,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Sepso => "sepso",
            Variant::SepsoNoAt => "sepso-noat",
            Variant::SepsoNoPi => "sepso-nopi",
            Variant::Dtpso => "dtpso",
            Variant::Dppso => "dppso",
            Variant::Pso => "pso",
        }
    }

    /// Whether the variant runs with evolved hyper-parameters.
    pub fn uses_evolved_hypers(self) -> bool {
        matches!(self, Variant::Sepso | Variant::SepsoNoAt | Variant::SepsoNoPi)
    }

    /// Planner switches for this variant on top of `base`.
    pub fn planner_config(self, base: &PlannerConfig) -> PlannerConfig {
        let (auto_truncation, priori_init) = match self {
            Variant::Sepso => (true, true),
            Variant::SepsoNoAt => (false, true),
            Variant::SepsoNoPi => (true, false),
            Variant::Dtpso | Variant::Dppso | Variant::Pso => (false, false),
        };
        PlannerConfig {
            auto_truncation: auto_truncation && base.auto_truncation,
            priori_init: priori_init && base.priori_init,
            ..base.clone()
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let wanted = s.trim().to_ascii_lowercase().replace(['_', '(', ')'], "-");
        let wanted = wanted.trim_end_matches('-');
        Variant::ALL.into_iter().find(|v| v.name() == wanted).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "unknown variant '{s}', expected one of sepso, sepso-noat, sepso-nopi, dtpso, dppso, pso"
            ))
        })
    }
}

/// Everything a scenario run needs besides the world.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanSetup {
    pub planner: PlannerConfig,
    /// Hypers for the evolved variants.
    pub evolved: HyperMatrix,
    /// Hypers for the grouped baselines.
    pub baseline: HyperMatrix,
    pub pso: PsoParams,
}

impl Default for PlanSetup {
    fn default() -> Self {
        Self {
            planner: PlannerConfig::default(),
            evolved: HyperMatrix::path_planning_evolved(),
            baseline: HyperMatrix::diversified_default(),
            pso: PsoParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame: usize,
    #[serde(flatten)]
    pub record: PlanRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimMetrics {
    pub variant: Variant,
    pub seed: u64,
    pub frames: usize,
    pub mean_path_length: f64,
    pub mean_wall_seconds: f64,
    pub mean_iterations: f64,
    pub collision_free_fraction: f64,
    pub truncated_fraction: f64,
    pub records: Vec<FrameRecord>,
}

impl SimMetrics {
    pub fn from_records(variant: Variant, seed: u64, records: Vec<FrameRecord>) -> Self {
        let n = records.len().max(1) as f64;
        let mean = |f: &dyn Fn(&PlanRecord) -> f64| records.iter().map(|r| f(&r.record)).sum::<f64>() / n;
        Self {
            variant,
            seed,
            frames: records.len(),
            mean_path_length: mean(&|r| r.length),
            mean_wall_seconds: mean(&|r| r.wall_seconds),
            mean_iterations: mean(&|r| r.iterations as f64),
            collision_free_fraction: mean(&|r| r.collision_free as u8 as f64),
            truncated_fraction: mean(&|r| r.truncated as u8 as f64),
            records,
        }
    }

    pub fn summary(&self) -> MetricsRow {
        MetricsRow {
            variant: self.variant.name().to_string(),
            seed: self.seed,
            frames: self.frames,
            path_length: self.mean_path_length,
            time_per_frame_seconds: self.mean_wall_seconds,
            iterations_per_frame: self.mean_iterations,
            collision_free_fraction: self.collision_free_fraction,
            truncated_fraction: self.truncated_fraction,
        }
    }
}

/// One CSV row of scenario metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub variant: String,
    pub seed: u64,
    pub frames: usize,
    pub path_length: f64,
    pub time_per_frame_seconds: f64,
    pub iterations_per_frame: f64,
    pub collision_free_fraction: f64,
    pub truncated_fraction: f64,
}

fn record_from_report(problem: &PathProblem, report: RunReport, started: Instant) -> Result<PlanRecord> {
    let collisions = problem.collisions(&report.final_point);
    Ok(PlanRecord {
        path: decode_path(&report.final_point)?,
        fitness: report.final_fitness,
        length: problem.length(&report.final_point),
        collisions,
        collision_free: collisions == 0,
        iterations: report.iterations,
        truncated: false,
        reason: StopReason::CapReached,
        wall_seconds: started.elapsed().as_secs_f64(),
        trace: report.trace,
    })
}

/// Runs `config.frames` frames of plan-then-step for one variant.
///
/// `on_frame` sees each frame's world snapshot and record as they are
/// produced. The world trajectory depends only on the scenario seed.
pub fn run_scenario_with<F>(
    config: &ScenarioConfig,
    variant: Variant,
    setup: &PlanSetup,
    mut on_frame: F,
) -> Result<SimMetrics>
where
    F: FnMut(usize, &PolygonWorld, &PlanRecord) -> Result<()>,
{
    config.validate()?;
    let planner_config = variant.planner_config(&setup.planner);
    let hypers = if variant.uses_evolved_hypers() {
        &setup.evolved
    } else {
        &setup.baseline
    };
    let mut planner = Planner::new(planner_config.clone(), hypers.clone())?;
    let mut world = generate_world(config, config.seed)?;
    let mut records = Vec::with_capacity(config.frames);
    for frame in 0..config.frames {
        let seed = derive_seed(config.seed, "swarm", frame as u64);
        let record = match variant {
            Variant::Sepso | Variant::SepsoNoAt | Variant::SepsoNoPi | Variant::Dtpso => planner.plan(&world, seed)?,
            Variant::Dppso | Variant::Pso => {
                let started = Instant::now();
                let pc = &planner_config;
                let problem = PathProblem::new(&world, pc.waypoints, pc.alpha, pc.beta)?;
                let report = if variant == Variant::Dppso {
                    run_dppso_reference(&problem, hypers, pc.particles, pc.fixed_iters, seed)?
                } else {
                    run_pso_reference(&problem, &setup.pso, pc.groups * pc.particles, pc.fixed_iters, seed)?
                };
                record_from_report(&problem, report, started)?
            }
        };
        on_frame(frame, &world, &record)?;
        records.push(FrameRecord { frame, record });
        world = step_world(&world, config.dt)?;
    }
    Ok(SimMetrics::from_records(variant, config.seed, records))
}

pub fn run_scenario(config: &ScenarioConfig, variant: Variant, setup: &PlanSetup) -> Result<SimMetrics> {
    run_scenario_with(config, variant, setup, |_, _, _| Ok(()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn speed(v: Point2) -> f64 {
        v.x.hypot(v.y)
    }

    #[test]
    fn generated_worlds_are_deterministic_and_in_range() {
        let config = ScenarioConfig::default();
        for seed in 0..20 {
            let a = generate_world(&config, seed).unwrap();
            assert_eq!(a, generate_world(&config, seed).unwrap());
            assert_eq!(a.obstacles.len(), 8);
            let statics: Vec<_> = a.obstacles.iter().filter(|o| o.kind == ObstacleKind::Static).collect();
            assert_eq!(statics.len(), 2);
            assert!(statics.iter().all(|o| o.velocity == Point2::default()));
            for o in a.obstacles.iter().filter(|o| o.kind == ObstacleKind::Dynamic) {
                let s = speed(o.velocity);
                assert!(s > 0.0 && s <= 5.0 + 1e-12, "{s}");
            }
            assert_eq!(a.start_velocity.x, 0.0);
            assert_eq!(a.start_velocity.y.abs(), 3.0);
            assert_eq!(a.target_velocity.y.abs(), 8.0);
            assert!(a
                .obstacles
                .iter()
                .all(|o| !o.strictly_contains(a.start) && !o.strictly_contains(a.target)));
        }
        assert_ne!(generate_world(&config, 1).unwrap(), generate_world(&config, 2).unwrap());
    }

    #[test]
    fn impossible_placement_is_reported() {
        let config = ScenarioConfig {
            dynamic_obstacles: 200,
            min_side: 70.0,
            max_side: 80.0,
            placement_attempts: 500,
            ..ScenarioConfig::default()
        };
        assert!(matches!(
            generate_world(&config, 0),
            Err(Error::PlacementExhausted { attempts: 500 })
        ));
    }

    fn lone_box(x: f64, velocity: Point2) -> PolygonWorld {
        PolygonWorld {
            width: 366.0,
            height: 366.0,
            start: Point2::new(10.0, 100.0),
            start_velocity: Point2::new(0.0, 3.0),
            target: Point2::new(350.0, 100.0),
            target_velocity: Point2::default(),
            obstacles: vec![Obstacle::rectangle(x, 50.0, 40.0, 40.0, velocity, ObstacleKind::Dynamic).unwrap()],
        }
    }

    #[test]
    fn resting_obstacle_stays() {
        let world = lone_box(100.0, Point2::default());
        let next = step_world(&world, 1.0).unwrap();
        assert_eq!(next.obstacles, world.obstacles);
    }

    #[test]
    fn border_reflection() {
        // Right edge at 364 moving +5: reaches 369, overshoots by 3, mirrors to 363.
        let world = lone_box(324.0, Point2::new(5.0, 0.0));
        let next = step_world(&world, 1.0).unwrap();
        let (lo, hi) = next.obstacles[0].extent();
        assert_eq!(hi.x, 363.0);
        assert_eq!(lo.x, 323.0);
        assert_eq!(next.obstacles[0].velocity, Point2::new(-5.0, 0.0));
        // Touching the border exactly flips the velocity with no shift.
        let touch = step_world(&lone_box(321.0, Point2::new(5.0, 0.0)), 1.0).unwrap();
        assert_eq!(touch.obstacles[0].extent().1.x, 366.0);
        assert_eq!(touch.obstacles[0].velocity.x, -5.0);
    }

    #[test]
    fn start_drifts_vertically() {
        let mut world = lone_box(100.0, Point2::default());
        for _ in 0..10 {
            world = step_world(&world, 1.0).unwrap();
        }
        assert_eq!(world.start, Point2::new(10.0, 130.0));
        assert!(step_world(&world, 0.0).is_err());
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert_eq!("SEPSO(NoAT)".parse::<Variant>().unwrap(), Variant::SepsoNoAt);
        assert!("sepso-fast".parse::<Variant>().is_err());
    }

    fn short_setup() -> PlanSetup {
        PlanSetup {
            planner: PlannerConfig {
                particles: 30,
                ..PlannerConfig::default()
            },
            ..PlanSetup::default()
        }
    }

    #[test]
    fn world_trajectory_does_not_depend_on_the_planner() {
        let config = ScenarioConfig {
            frames: 4,
            seed: 5,
            ..ScenarioConfig::default()
        };
        let mut seen: Vec<Vec<PolygonWorld>> = vec![];
        for variant in [Variant::Sepso, Variant::Pso, Variant::Dppso] {
            let mut worlds = vec![];
            run_scenario_with(&config, variant, &short_setup(), |_, w, _| {
                worlds.push(w.clone());
                Ok(())
            })
            .unwrap();
            seen.push(worlds);
        }
        assert_eq!(seen[0], seen[1]);
        assert_eq!(seen[0], seen[2]);
        assert_eq!(seen[0][3], world_at(&config, 5, 3).unwrap());
    }

    #[test]
    fn fixed_budget_variants_and_metric_consistency() {
        let config = ScenarioConfig {
            frames: 3,
            seed: 2,
            ..ScenarioConfig::default()
        };
        for variant in [Variant::SepsoNoAt, Variant::Dtpso, Variant::Dppso, Variant::Pso] {
            let m = run_scenario(&config, variant, &short_setup()).unwrap();
            assert_eq!(m.mean_iterations, 30.0, "{variant}");
            let again = SimMetrics::from_records(variant, 2, m.records.clone());
            assert_eq!(again, m);
            let len: f64 = m.records.iter().map(|r| r.record.length).sum::<f64>() / 3.0;
            assert_eq!(m.mean_path_length, len);
        }
    }

    #[test]
    fn metrics_json_round_trip() {
        let config = ScenarioConfig {
            frames: 2,
            ..ScenarioConfig::default()
        };
        let m = run_scenario(&config, Variant::Sepso, &short_setup()).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(serde_json::from_str::<SimMetrics>(&text).unwrap(), m);
        for r in &m.records {
            assert!(r.record.iterations <= 50);
            if r.record.truncated {
                assert!(r.record.collision_free);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn bodies_stay_inside_and_keep_their_speed(seed in 0u64..10_000, steps in 1usize..150) {
            let config = ScenarioConfig::default();
            let mut world = generate_world(&config, seed).unwrap();
            let speeds: Vec<f64> = world.obstacles.iter().map(|o| speed(o.velocity)).collect();
            for _ in 0..steps {
                world = step_world(&world, config.dt).unwrap();
                prop_assert!(world.validate().is_ok());
            }
            for (o, s) in world.obstacles.iter().zip(&speeds) {
                prop_assert_eq!(speed(o.velocity), *s);
            }
            prop_assert_eq!(world.start_velocity.y.abs(), 3.0);
            prop_assert_eq!(world.target_velocity.y.abs(), 8.0);
        }
    }
}
