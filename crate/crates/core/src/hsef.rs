//! Two-level hyper-parameter self-evolution.
//!
//! An outer batched swarm searches the space of `(G, 6)` hyper-matrices. Each
//! outer particle is decoded into a matrix, an inner swarm is run with it on
//! the target problem, and the inner run's lowest fitness value (LFV) becomes
//! the outer particle's fitness. The outer swarm itself always uses a fixed
//! hyper-matrix.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::problem::FitnessProblem;
use crate::rng::{derive_seed, RngStream};
use crate::runner::{run_dtpso, TensorSwarm};
use crate::swarm::{HyperMatrix, HyperRow, SearchBounds};

/// Per-field search interval of the outer swarm, in the order
/// `c1, c2, c3, omega_init, omega_end, v_limit`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperSpace {
    pub lo: [f64; 6],
    pub hi: [f64; 6],
}

impl Default for HyperSpace {
    fn default() -> Self {
        Self {
            lo: [0.5, 0.5, 0.5, 0.1, 0.05, 0.05],
            hi: [2.5, 2.5, 2.5, 1.0, 0.8, 1.0],
        }
    }
}

impl HyperSpace {
    pub fn contains(&self, row: &HyperRow) -> bool {
        row.to_array()
            .iter()
            .enumerate()
            .all(|(i, v)| self.lo[i] <= *v && *v <= self.hi[i])
    }
}

/// Flattening between a `(G, 6)` hyper-matrix and a `6·G` particle.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperEncoding {
    groups: usize,
    space: HyperSpace,
}

impl HyperEncoding {
    pub fn new(groups: usize) -> Result<Self> {
        Self::with_space(groups, HyperSpace::default())
    }

    pub fn with_space(groups: usize, space: HyperSpace) -> Result<Self> {
        if groups == 0 {
            return Err(Error::InvalidArgument("hyper-matrix needs at least one group".into()));
        }
        for i in 0..6 {
            if !(space.lo[i] < space.hi[i]) {
                return Err(Error::InvalidBounds(format!("hyper space field {i} is empty")));
            }
        }
        if space.lo[0..3].iter().any(|v| *v < 0.0)
            || space.lo[3] < 0.0
            || space.lo[4] < 0.0
            || space.hi[3] > 1.0
            || space.hi[4] > 1.0
            || space.lo[5] <= 0.0
            || space.hi[5] > 1.0
        {
            return Err(Error::InvalidBounds(
                "hyper space must lie inside the valid hyper-parameter region".into(),
            ));
        }
        Ok(Self { groups, space })
    }

    pub fn groups(&self) -> usize {
        self.groups
    }

    pub fn dim(&self) -> usize {
        6 * self.groups
    }

    pub fn space(&self) -> &HyperSpace {
        &self.space
    }

    /// Search box of the outer swarm.
    pub fn bounds(&self) -> SearchBounds {
        let lo = (0..self.groups).flat_map(|_| self.space.lo).collect();
        let hi = (0..self.groups).flat_map(|_| self.space.hi).collect();
        SearchBounds::new(lo, hi).expect("hyper space checked at construction")
    }

    pub fn flatten(&self, hypers: &HyperMatrix) -> Result<Vec<f64>> {
        check_len("hyper-matrix groups", self.groups, hypers.groups())?;
        Ok(hypers.rows().iter().flat_map(|r| r.to_array()).collect())
    }

    /// Decodes a particle. An inverted inertia pair is repaired by swapping
    /// the two endpoints.
    pub fn unflatten(&self, particle: &[f64]) -> Result<HyperMatrix> {
        check_len("hyper particle", self.dim(), particle.len())?;
        let rows = particle
            .chunks_exact(6)
            .map(|c| {
                let mut row = HyperRow::from_array([c[0], c[1], c[2], c[3], c[4], c[5]]);
                if row.omega_end > row.omega_init {
                    std::mem::swap(&mut row.omega_end, &mut row.omega_init);
                }
                row
            })
            .collect();
        HyperMatrix::new(rows)
    }
}

/// Swarm size and run length of the inner optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InnerBudget {
    pub groups: usize,
    pub particles: usize,
    pub iterations: usize,
}

impl InnerBudget {
    pub fn evaluations(&self) -> u64 {
        (self.groups * self.particles * self.iterations) as u64
    }
}

impl Default for InnerBudget {
    fn default() -> Self {
        Self {
            groups: 8,
            particles: 10,
            iterations: 1400,
        }
    }
}

/// Swarm size and evolution count of the outer optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OuterBudget {
    pub groups: usize,
    pub particles: usize,
    pub evolutions: usize,
}

impl Default for OuterBudget {
    fn default() -> Self {
        Self {
            groups: 8,
            particles: 10,
            evolutions: 500,
        }
    }
}

/// How inner runs are seeded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeedPolicy {
    /// A fresh seed per evaluation, derived from the root seed, the evolution
    /// index and the outer particle index.
    #[default]
    FreshPerEvaluation,
    /// Every inner run uses the same seed.
    Fixed,
}

impl SeedPolicy {
    pub fn inner_seed(self, root: u64, evolution: usize, particle: usize) -> u64 {
        match self {
            SeedPolicy::FreshPerEvaluation => derive_seed(root, "inner", ((evolution as u64) << 32) | particle as u64),
            SeedPolicy::Fixed => derive_seed(root, "inner", 0),
        }
    }
}

/// Lowest fitness value reached by an inner run with the decoded candidate.
///
/// Candidates that fail to decode, or inner runs that fail, score `+inf`.
pub fn lfv_fitness<P: FitnessProblem + ?Sized>(
    candidate: &[f64],
    encoding: &HyperEncoding,
    problem: &P,
    inner: InnerBudget,
    seed: u64,
) -> f64 {
    if encoding.groups() != inner.groups {
        return f64::INFINITY;
    }
    let Ok(hypers) = encoding.unflatten(candidate) else {
        return f64::INFINITY;
    };
    match run_dtpso(problem, &hypers, inner.particles, inner.iterations, seed) {
        Ok(report) => report.final_fitness,
        Err(_) => f64::INFINITY,
    }
}

/// Outcome of an evolution run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionReport {
    pub problem: String,
    /// Best LFV seen so far, after each evolution.
    #[serde(with = "non_finite_as_null")]
    pub best_lfv_trace: Vec<f64>,
    /// Lowest LFV among the evaluations of each evolution.
    #[serde(with = "non_finite_as_null")]
    pub evolution_best_trace: Vec<f64>,
    pub best_hypers: HyperMatrix,
    pub best_lfv: Option<f64>,
    pub evolutions: usize,
    pub outer: OuterBudget,
    pub inner: InnerBudget,
    pub seed: u64,
    pub seed_policy: SeedPolicy,
    /// Inner fitness evaluations spent across all LFV runs.
    pub inner_evaluations: u64,
}

impl EvolutionReport {
    /// Persistable hyper-parameter file for the best matrix found.
    pub fn hyper_file(&self) -> HyperFile {
        HyperFile {
            groups: self.best_hypers.clone(),
            provenance: Provenance {
                problem: self.problem.clone(),
                outer: self.outer,
                inner: self.inner,
                seed: self.seed,
                seed_policy: self.seed_policy,
                best_lfv: self.best_lfv,
            },
        }
    }
}

/// Runs the outer swarm for `outer.evolutions` iterations over hyper space.
///
/// `outer_hypers` stays fixed for the whole run. Inner evaluations of one
/// evolution run in parallel; results are collected in particle order so
/// the outcome does not depend on scheduling.
pub fn evolve<P: FitnessProblem + ?Sized>(
    problem: &P,
    outer_hypers: &HyperMatrix,
    outer: OuterBudget,
    inner: InnerBudget,
    seed: u64,
    policy: SeedPolicy,
) -> Result<EvolutionReport> {
    if outer.evolutions == 0 || outer.particles == 0 || inner.particles == 0 || inner.iterations == 0 {
        return Err(Error::InvalidArgument("evolution budgets must be at least 1".into()));
    }
    check_len("outer hyper-matrix groups", outer.groups, outer_hypers.groups())?;
    let encoding = HyperEncoding::new(inner.groups)?;
    let dim = encoding.dim();
    let mut swarm = TensorSwarm::new(
        outer_hypers.clone(),
        encoding.bounds(),
        outer.particles,
        outer.evolutions,
        RngStream::new(derive_seed(seed, "outer", 0)),
    )?;

    let mut best_lfv_trace = Vec::with_capacity(outer.evolutions);
    let mut evolution_best_trace = Vec::with_capacity(outer.evolutions);
    for e in 0..outer.evolutions {
        let positions = &swarm.state().x;
        let fitness: Vec<f64> = positions
            .par_chunks_exact(dim)
            .enumerate()
            .map(|(i, candidate)| lfv_fitness(candidate, &encoding, problem, inner, policy.inner_seed(seed, e, i)))
            .collect();
        swarm.observe(&fitness)?;
        evolution_best_trace.push(fitness.iter().copied().fold(f64::INFINITY, f64::min));
        best_lfv_trace.push(swarm.best().1);
        swarm.advance()?;
    }

    let (best_x, best_f) = swarm.best();
    let best_hypers = encoding.unflatten(best_x)?;
    let runs = (outer.evolutions * outer.groups * outer.particles) as u64;
    Ok(EvolutionReport {
        problem: problem.name().to_string(),
        best_lfv_trace,
        evolution_best_trace,
        best_hypers,
        best_lfv: best_f.is_finite().then_some(best_f),
        evolutions: outer.evolutions,
        outer,
        inner,
        seed,
        seed_policy: policy,
        inner_evaluations: runs * inner.evaluations(),
    })
}

/// Where a persisted hyper-matrix came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub problem: String,
    pub outer: OuterBudget,
    pub inner: InnerBudget,
    pub seed: u64,
    pub seed_policy: SeedPolicy,
    pub best_lfv: Option<f64>,
}

/// JSON document holding an evolved hyper-matrix (`G` rows of six named
/// fields) with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperFile {
    pub groups: HyperMatrix,
    pub provenance: Provenance,
}

impl HyperFile {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("hyper file serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidHyper(format!("malformed hyper file: {e}")))
    }
}

mod non_finite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(values: &[f64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(values.iter().map(|v| v.is_finite().then_some(*v)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let raw: Vec<Option<f64>> = Vec::deserialize(d)?;
        Ok(raw.into_iter().map(|v| v.unwrap_or(f64::INFINITY)).collect())
    }
}
