//! Group-diversified particle swarm optimization in batched tensor form,
//! with a two-level hyper-parameter self-evolution loop and a real-time
//! dynamic path planner built on top.

pub mod benchmarks;
pub mod error;
pub mod geometry;
pub mod hsef;
pub mod planner;
pub mod problem;
pub mod render;
pub mod rng;
pub mod runner;
pub mod simenv;
pub mod swarm;

pub use benchmarks::{Benchmark, BenchmarkId};
pub use error::{Error, Result};
pub use geometry::{Obstacle, ObstacleKind, Path, PathProblem, Point2, PolygonWorld};
pub use hsef::{evolve, EvolutionReport, HyperEncoding, HyperFile, InnerBudget, OuterBudget, SeedPolicy};
pub use planner::{plan_frame, PlanRecord, Planner, PlannerConfig};
pub use problem::{CountingProblem, FitnessProblem, FnProblem};
pub use rng::{derive_seed, RngStream};
pub use runner::{run_dppso_reference, run_dtpso, run_pso_reference, update_bests, PsoParams, RunReport, TensorSwarm};
pub use simenv::{run_scenario, PlanSetup, ScenarioConfig, SimMetrics, Variant};
pub use swarm::{inertia_at, init_swarm, step, HyperMatrix, HyperRow, SearchBounds, SwarmState};
