//! Per-frame path planning with prior-guided initialization and automatic
//! truncation.
//!
//! Each frame runs the batched swarm on the frozen world's path fitness.
//! A fraction of every group starts near the previous frame's best path, and
//! the frame stops early once the best fitness has settled over a sliding
//! window while the best path is collision-free.

use std::collections::VecDeque;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::geometry::{decode_path, encode_path, Path, PathProblem, PolygonWorld};
use crate::rng::RngStream;
use crate::runner::TensorSwarm;
use crate::swarm::{swarm_from_positions, HyperMatrix, SearchBounds};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    /// Penalty scale.
    pub alpha: f64,
    /// Penalty exponent.
    pub beta: f64,
    /// Fraction of each group seeded near the previous best path.
    pub gamma: f64,
    /// Truncation threshold on the window's standard deviation.
    pub delta: f64,
    /// Truncation window length, in iterations.
    pub tw: usize,
    /// Half-width of the prior interval per coordinate, in cm.
    pub pi_radius: f64,
    /// Iteration cap when truncation is enabled.
    pub max_iters_per_frame: usize,
    /// Iterations per frame when truncation is disabled.
    pub fixed_iters: usize,
    pub groups: usize,
    pub particles: usize,
    pub waypoints: usize,
    pub auto_truncation: bool,
    pub priori_init: bool,
    /// Keep the truncation window across frames instead of clearing it.
    pub window_carryover: bool,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            alpha: 30.0,
            beta: 4.0,
            gamma: 0.25,
            delta: 10.0,
            tw: 20,
            pi_radius: 20.0,
            max_iters_per_frame: 50,
            fixed_iters: 30,
            groups: 8,
            particles: 170,
            waypoints: 8,
            auto_truncation: true,
            priori_init: true,
            window_carryover: false,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(format!("planner config: {msg}")));
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1]");
        }
        if self.tw < 2 {
            return bad("tw must be at least 2");
        }
        if !(self.delta > 0.0) {
            return bad("delta must be positive");
        }
        if !(self.pi_radius > 0.0) {
            return bad("pi_radius must be positive");
        }
        if self.max_iters_per_frame == 0 || self.fixed_iters == 0 {
            return bad("iteration budgets must be at least 1");
        }
        if self.groups == 0 || self.particles == 0 || self.waypoints == 0 {
            return bad("groups, particles and waypoints must be at least 1");
        }
        if !(self.alpha >= 0.0 && self.beta >= 1.0) {
            return bad("penalty needs alpha >= 0 and beta >= 1");
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        2 * self.waypoints
    }

    /// Iterations a frame may run.
    pub fn iteration_cap(&self) -> usize {
        if self.auto_truncation {
            self.max_iters_per_frame
        } else {
            self.fixed_iters
        }
    }

    /// Particles per group seeded near the previous best.
    pub fn prior_count(&self) -> usize {
        (self.gamma * self.particles as f64).floor() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    /// The window settled and the best path was collision-free.
    Converged,
    CapReached,
}

/// Outcome of planning one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRecord {
    pub path: Path,
    pub fitness: f64,
    pub length: f64,
    pub collisions: usize,
    pub collision_free: bool,
    pub iterations: usize,
    pub truncated: bool,
    pub reason: StopReason,
    pub wall_seconds: f64,
    /// Best fitness after each iteration.
    pub trace: Vec<f64>,
}

/// Initial positions for one frame, row-major over `(group, particle, dim)`.
///
/// The first `⌊gamma·N⌋` particles of every group are drawn inside the box
/// `prev ± pi_radius` (clipped to `bounds`); the rest, or all of them when
/// there is no previous path, over the whole box. Draws run in the same
/// order as a plain uniform initialization.
pub fn priori_init(
    prev_best: Option<&Path>,
    config: &PlannerConfig,
    bounds: &SearchBounds,
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    let dim = bounds.dim();
    let (lo, hi) = (bounds.lo(), bounds.hi());
    let prior = match prev_best {
        Some(path) => {
            check_len("previous path waypoints", dim / 2, path.len())?;
            let centre = encode_path(path);
            let plo: Vec<f64> = (0..dim)
                .map(|d| (centre[d].clamp(lo[d], hi[d]) - config.pi_radius).max(lo[d]))
                .collect();
            let phi: Vec<f64> = (0..dim)
                .map(|d| (centre[d].clamp(lo[d], hi[d]) + config.pi_radius).min(hi[d]))
                .collect();
            Some((plo, phi))
        }
        None => None,
    };
    let seeded = if prior.is_some() { config.prior_count() } else { 0 };
    let mut x = vec![0.0; config.groups * config.particles * dim];
    for (i, row) in x.chunks_exact_mut(dim).enumerate() {
        let (rlo, rhi) = match &prior {
            Some((plo, phi)) if i % config.particles < seeded => (plo.as_slice(), phi.as_slice()),
            _ => (lo, hi),
        };
        for (d, slot) in row.iter_mut().enumerate() {
            *slot = rng.uniform_in(rlo[d], rhi[d]);
        }
    }
    Ok(x)
}

/// Population standard deviation of the last `tw` values.
fn window_std(window: &VecDeque<f64>, tw: usize) -> f64 {
    let tail = window.iter().skip(window.len() - tw);
    let mean = tail.clone().sum::<f64>() / tw as f64;
    (tail.map(|v| (v - mean) * (v - mean)).sum::<f64>() / tw as f64).sqrt()
}

/// True once the window holds `tw` values whose population standard
/// deviation is below `delta` and the best path is collision-free.
pub fn should_truncate(window: &[f64], best_is_collision_free: bool, config: &PlannerConfig) -> bool {
    if window.len() < config.tw {
        return false;
    }
    let window: VecDeque<f64> = window.iter().copied().collect();
    best_is_collision_free && window_std(&window, config.tw) < config.delta
}

fn plan_with_window(
    world: &PolygonWorld,
    prev_best: Option<&Path>,
    hypers: &HyperMatrix,
    config: &PlannerConfig,
    seed: u64,
    window: &mut VecDeque<f64>,
) -> Result<PlanRecord> {
    config.validate()?;
    check_len("hyper-matrix groups", config.groups, hypers.groups())?;
    let started = Instant::now();
    let problem = PathProblem::new(world, config.waypoints, config.alpha, config.beta)?;
    let bounds = crate::problem::FitnessProblem::bounds(&problem).clone();
    let mut rng = RngStream::new(seed);
    let prior = if config.priori_init { prev_best } else { None };
    let x = priori_init(prior, config, &bounds, &mut rng)?;
    let state = swarm_from_positions(x, hypers, &bounds, config.groups, config.particles, &mut rng)?;
    let cap = config.iteration_cap();
    let mut swarm = TensorSwarm::from_state(state, hypers.clone(), bounds, cap, rng)?;

    let mut trace = Vec::with_capacity(cap);
    let mut reason = StopReason::CapReached;
    for k in 1..=cap {
        swarm.evaluate(&problem)?;
        let best = swarm.best().1;
        trace.push(best);
        window.push_back(best);
        while window.len() > config.tw {
            window.pop_front();
        }
        if config.auto_truncation
            && window.len() >= config.tw
            && window_std(window, config.tw) < config.delta
            && problem.collisions(swarm.best().0) == 0
        {
            reason = StopReason::Converged;
            break;
        }
        if k < cap {
            swarm.advance()?;
        }
    }

    let (best_x, fitness) = swarm.best();
    let collisions = problem.collisions(best_x);
    Ok(PlanRecord {
        path: decode_path(best_x)?,
        fitness,
        length: problem.length(best_x),
        collisions,
        collision_free: collisions == 0,
        iterations: trace.len(),
        truncated: reason == StopReason::Converged,
        reason,
        wall_seconds: started.elapsed().as_secs_f64(),
        trace,
    })
}

/// Plans a single frame with an empty truncation window.
pub fn plan_frame(
    world: &PolygonWorld,
    prev_best: Option<&Path>,
    hypers: &HyperMatrix,
    config: &PlannerConfig,
    seed: u64,
) -> Result<PlanRecord> {
    plan_with_window(world, prev_best, hypers, config, seed, &mut VecDeque::new())
}

/// Frame-to-frame planner that remembers the previous best path and,
/// optionally, the truncation window.
#[derive(Debug, Clone)]
pub struct Planner {
    config: PlannerConfig,
    hypers: HyperMatrix,
    prev_best: Option<Path>,
    window: VecDeque<f64>,
}

impl Planner {
    pub fn new(config: PlannerConfig, hypers: HyperMatrix) -> Result<Self> {
        config.validate()?;
        check_len("hyper-matrix groups", config.groups, hypers.groups())?;
        Ok(Self {
            config,
            hypers,
            prev_best: None,
            window: VecDeque::new(),
        })
    }

    pub fn config(&self) -> &PlannerConfig {
        &self.config
    }

    pub fn previous_best(&self) -> Option<&Path> {
        self.prev_best.as_ref()
    }

    pub fn plan(&mut self, world: &PolygonWorld, seed: u64) -> Result<PlanRecord> {
        if !self.config.window_carryover {
            self.window.clear();
        }
        let record = plan_with_window(
            world,
            self.prev_best.as_ref(),
            &self.hypers,
            &self.config,
            seed,
            &mut self.window,
        )?;
        self.prev_best = Some(record.path.clone());
        Ok(record)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::fixtures::{crossing_box_world, empty_world};
    use crate::geometry::Point2;
    use crate::swarm::init_swarm;

    fn small_config() -> PlannerConfig {
        PlannerConfig {
            particles: 40,
            ..PlannerConfig::default()
        }
    }

    fn map_bounds(waypoints: usize) -> SearchBounds {
        let world = empty_world(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0));
        crate::problem::FitnessProblem::bounds(&PathProblem::new(&world, waypoints, 30.0, 4.0).unwrap()).clone()
    }

    #[test]
    fn truncation_rule() {
        let c = PlannerConfig::default();
        assert!(should_truncate(&[400.0; 20], true, &c));
        assert!(!should_truncate(&[400.0; 20], false, &c));
        assert!(!should_truncate(&[400.0; 19], true, &c));
        let alternating: Vec<f64> = (0..20).map(|i| if i % 2 == 0 { 0.0 } else { 100.0 }).collect();
        assert!(!should_truncate(&alternating, true, &c));
        // Only the last `tw` values matter.
        let mut long = vec![1e6; 5];
        long.extend([7.0; 20]);
        assert!(should_truncate(&long, true, &c));
    }

    #[test]
    fn window_std_by_hand() {
        let w: VecDeque<f64> = (0..20).map(|i| if i % 2 == 0 { 0.0 } else { 100.0 }).collect();
        assert_eq!(window_std(&w, 20), 50.0);
    }

    #[test]
    fn prior_count_and_partition() {
        let config = PlannerConfig::default();
        assert_eq!(config.prior_count(), 42);
        let bounds = map_bounds(8);
        let prev = Path {
            waypoints: (0..8).map(|i| Point2::new(100.0 + 10.0 * i as f64, 200.0)).collect(),
        };
        let centre = encode_path(&prev);
        let x = priori_init(Some(&prev), &config, &bounds, &mut RngStream::new(4)).unwrap();
        assert_eq!(x.len(), 8 * 170 * 16);
        for (i, row) in x.chunks_exact(16).enumerate() {
            let near = row.iter().zip(&centre).all(|(v, c)| (v - c).abs() <= 20.0);
            if i % 170 < 42 {
                assert!(near, "particle {i} outside the prior box");
            }
            assert!(bounds.contains(row));
        }
        let far = x
            .chunks_exact(16)
            .enumerate()
            .filter(|(i, r)| i % 170 >= 42 && { !r.iter().zip(&centre).all(|(v, c)| (v - c).abs() <= 20.0) });
        assert_eq!(far.count(), 8 * 128);
    }

    #[test]
    fn prior_box_is_clipped_at_the_corner() {
        let config = PlannerConfig::default();
        let bounds = map_bounds(8);
        let corner = Path {
            waypoints: vec![Point2::new(366.0, 0.0); 8],
        };
        let x = priori_init(Some(&corner), &config, &bounds, &mut RngStream::new(1)).unwrap();
        for row in x.chunks_exact(16).take(42) {
            assert!(row[..8].iter().all(|v| (346.0..=366.0).contains(v)));
            assert!(row[8..].iter().all(|v| (0.0..=20.0).contains(v)));
        }
    }

    #[test]
    fn zero_gamma_matches_plain_initialization() {
        let config = PlannerConfig {
            gamma: 0.0,
            ..small_config()
        };
        let bounds = map_bounds(8);
        let hypers = HyperMatrix::path_planning_evolved();
        let prev = Path {
            waypoints: vec![Point2::new(10.0, 10.0); 8],
        };
        let mut a = RngStream::new(8);
        let x = priori_init(Some(&prev), &config, &bounds, &mut a).unwrap();
        let from_prior = swarm_from_positions(x, &hypers, &bounds, 8, 40, &mut a).unwrap();
        let plain = init_swarm(&hypers, &bounds, 8, 40, 16, &mut RngStream::new(8)).unwrap();
        assert_eq!(from_prior, plain);
    }

    #[test]
    fn mismatched_previous_path_is_rejected() {
        let prev = Path {
            waypoints: vec![Point2::new(1.0, 1.0); 3],
        };
        let err = priori_init(
            Some(&prev),
            &PlannerConfig::default(),
            &map_bounds(8),
            &mut RngStream::new(0),
        );
        assert!(err.is_err());
    }

    #[test]
    fn open_world_converges_to_the_straight_line() {
        let world = empty_world(Point2::new(20.0, 30.0), Point2::new(340.0, 300.0));
        let config = PlannerConfig {
            auto_truncation: false,
            fixed_iters: 200,
            waypoints: 2,
            ..small_config()
        };
        let r = plan_frame(&world, None, &HyperMatrix::path_planning_evolved(), &config, 3).unwrap();
        let straight = world.start.distance(world.target);
        assert!(r.fitness >= straight * (1.0 - 1e-12));
        assert!(r.fitness <= straight * 1.01, "{} vs {}", r.fitness, straight);
        assert_eq!(r.iterations, 200);
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn frozen_world_is_reproducible_and_sound() {
        let (world, _) = crossing_box_world();
        let hypers = HyperMatrix::path_planning_evolved();
        let config = small_config();
        let a = plan_frame(&world, None, &hypers, &config, 21).unwrap();
        let b = plan_frame(&world, None, &hypers, &config, 21).unwrap();
        assert_eq!(
            PlanRecord {
                wall_seconds: 0.0,
                ..a.clone()
            },
            PlanRecord { wall_seconds: 0.0, ..b }
        );
        assert!(a.iterations <= config.max_iters_per_frame);
        if a.truncated {
            assert!(a.collision_free);
            assert!(a.iterations >= config.tw);
        }
    }

    #[test]
    fn fixed_budget_runs_every_iteration() {
        let (world, _) = crossing_box_world();
        let config = PlannerConfig {
            auto_truncation: false,
            ..small_config()
        };
        let r = plan_frame(&world, None, &HyperMatrix::path_planning_evolved(), &config, 2).unwrap();
        assert_eq!(r.iterations, 30);
        assert!(!r.truncated);
        assert_eq!(r.reason, StopReason::CapReached);
    }

    #[test]
    fn planner_carries_the_window_only_when_asked() {
        let world = empty_world(Point2::new(20.0, 30.0), Point2::new(340.0, 300.0));
        let hypers = HyperMatrix::path_planning_evolved();
        let mut reset = Planner::new(small_config(), hypers.clone()).unwrap();
        let mut carry = Planner::new(
            PlannerConfig {
                window_carryover: true,
                ..small_config()
            },
            hypers,
        )
        .unwrap();
        for seed in 0..3 {
            let r = reset.plan(&world, seed).unwrap();
            assert!(r.iterations >= 20);
            carry.plan(&world, seed).unwrap();
        }
        assert!(carry.previous_best().is_some());
        let r = carry.plan(&world, 9).unwrap();
        assert!(
            r.iterations < 20,
            "carried window should allow an early stop, got {}",
            r.iterations
        );
    }

    #[test]
    fn config_validation() {
        for bad in [
            PlannerConfig {
                gamma: 1.5,
                ..PlannerConfig::default()
            },
            PlannerConfig {
                tw: 1,
                ..PlannerConfig::default()
            },
            PlannerConfig {
                delta: 0.0,
                ..PlannerConfig::default()
            },
            PlannerConfig {
                pi_radius: -1.0,
                ..PlannerConfig::default()
            },
        ] {
            assert!(bad.validate().is_err());
        }
        let json = serde_json::to_string(&PlannerConfig::default()).unwrap();
        assert_eq!(
            serde_json::from_str::<PlannerConfig>(&json).unwrap(),
            PlannerConfig::default()
        );
        assert_eq!(serde_json::from_str::<PlannerConfig>("{\"tw\": 5}").unwrap().tw, 5);
    }
}
