//! Optimization drivers.
//!
//! [`TensorSwarm`] runs the batched group-diversified swarm one phase at a
//! time (evaluate, update bests, advance) so callers such as the planner and
//! the hyper-parameter search can interleave their own logic. [`run_dtpso`]
//! drives it for a fixed number of iterations.
//!
//! [`run_dppso_reference`] and [`run_pso_reference`] are independent
//! particle-by-particle implementations. They consume random variates in the
//! same order as the batched path, so under a shared seed the grouped
//! reference reproduces [`run_dtpso`] exactly.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::problem::FitnessProblem;
use crate::rng::RngStream;
use crate::swarm::{init_swarm, step_in_place, HyperMatrix, HyperRow, RandomFactors, SearchBounds, SwarmState};

/// Result of one optimization run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    /// Iterations executed.
    pub iterations: usize,
    /// Best-so-far fitness after each iteration.
    pub trace: Vec<f64>,
    pub final_point: Vec<f64>,
    pub final_fitness: f64,
    pub evaluations: u64,
    pub wall_seconds: f64,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Installs new personal, group and population bests from one fitness batch.
///
/// Only strict improvements replace a best; ties keep the incumbent. `+inf`
/// is accepted and never installs anything; NaN is rejected.
pub fn update_bests(state: &mut SwarmState, fitness: &[f64]) -> Result<()> {
    check_len("fitness batch", state.population(), fitness.len())?;
    install_personal_bests(state, 0, fitness)?;
    refresh_shared_bests(state);
    Ok(())
}

/// Personal-best update for the particles `first..first + fitness.len()`
/// (flat particle indices).
fn install_personal_bests(state: &mut SwarmState, first: usize, fitness: &[f64]) -> Result<()> {
    if let Some(i) = fitness.iter().position(|f| f.is_nan()) {
        return Err(Error::NonFiniteFitness {
            group: (first + i) / state.particles,
            particle: (first + i) % state.particles,
            value: f64::NAN,
        });
    }
    let dim = state.dim;
    for (offset, &f) in fitness.iter().enumerate() {
        let i = first + offset;
        if f < state.pbest_f[i] {
            state.pbest_f[i] = f;
            state.pbest_x[i * dim..(i + 1) * dim].copy_from_slice(&state.x[i * dim..(i + 1) * dim]);
        }
    }
    Ok(())
}

/// Group and population bests from the current personal bests.
fn refresh_shared_bests(state: &mut SwarmState) {
    let dim = state.dim;
    for g in 0..state.groups {
        let block = &state.pbest_f[g * state.particles..(g + 1) * state.particles];
        let (n, best) = first_min(block);
        if best < state.gbest_f[g] {
            let i = g * state.particles + n;
            state.gbest_f[g] = best;
            state.gbest_x[g * dim..(g + 1) * dim].copy_from_slice(&state.pbest_x[i * dim..(i + 1) * dim]);
        }
    }
    let (g, best) = first_min(&state.gbest_f);
    if best < state.tbest_f {
        state.tbest_f = best;
        state.tbest_x.copy_from_slice(&state.gbest_x[g * dim..(g + 1) * dim]);
    }
}

fn first_min(values: &[f64]) -> (usize, f64) {
    let mut idx = 0;
    let mut best = values[0];
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < best {
            best = v;
            idx = i;
        }
    }
    (idx, best)
}

const EVAL_BLOCK_BYTES: usize = 256 * 1024;

/// Batched group-diversified swarm with phase-level control.
#[derive(Debug, Clone)]
pub struct TensorSwarm {
    state: SwarmState,
    hypers: HyperMatrix,
    bounds: SearchBounds,
    rng: RngStream,
    horizon: usize,
    fitness: Vec<f64>,
    evaluations: u64,
}

impl TensorSwarm {
    /// Uniformly initialized swarm whose inertia schedule spans `horizon`
    /// iterations.
    pub fn new(
        hypers: HyperMatrix,
        bounds: SearchBounds,
        particles: usize,
        horizon: usize,
        mut rng: RngStream,
    ) -> Result<Self> {
        let state = init_swarm(&hypers, &bounds, hypers.groups(), particles, bounds.dim(), &mut rng)?;
        Self::from_state(state, hypers, bounds, horizon, rng)
    }

    pub fn from_state(
        state: SwarmState,
        hypers: HyperMatrix,
        bounds: SearchBounds,
        horizon: usize,
        rng: RngStream,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidArgument("iteration count must be at least 1".into()));
        }
        check_len("hyper-matrix groups", state.groups, hypers.groups())?;
        check_len("bounds dimension", state.dim, bounds.dim())?;
        let fitness = vec![f64::INFINITY; state.population()];
        Ok(Self {
            state,
            hypers,
            bounds,
            rng,
            horizon,
            fitness,
            evaluations: 0,
        })
    }

    pub fn state(&self) -> &SwarmState {
        &self.state
    }

    pub fn hypers(&self) -> &HyperMatrix {
        &self.hypers
    }

    pub fn bounds(&self) -> &SearchBounds {
        &self.bounds
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Completed iterations (evaluation passes).
    pub fn iteration(&self) -> usize {
        self.state.k
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    /// Fitness of the current positions from the latest evaluation.
    pub fn last_fitness(&self) -> &[f64] {
        &self.fitness
    }

    pub fn best(&self) -> (&[f64], f64) {
        (&self.state.tbest_x, self.state.tbest_f)
    }

    /// Evaluates the whole population, then installs new bests.
    ///
    /// Rows are evaluated in cache-sized blocks and personal bests are
    /// installed while each block is still hot.
    pub fn evaluate<P: FitnessProblem + ?Sized>(&mut self, problem: &P) -> Result<()> {
        check_len("problem dimension", self.state.dim, problem.dim())?;
        let dim = self.state.dim;
        let block = (EVAL_BLOCK_BYTES / (dim * 8)).clamp(1, self.state.population());
        let mut fitness = std::mem::take(&mut self.fitness);
        let mut first = 0;
        for out in fitness.chunks_mut(block) {
            let rows = first..first + out.len();
            problem.evaluate_batch(&self.state.x[rows.start * dim..rows.end * dim], out);
            if let Some(i) = out.iter().position(|f| !f.is_finite()) {
                let value = out[i];
                self.fitness = fitness;
                return Err(Error::NonFiniteFitness {
                    group: (first + i) / self.state.particles,
                    particle: (first + i) % self.state.particles,
                    value,
                });
            }
            install_personal_bests(&mut self.state, first, out)?;
            first = rows.end;
        }
        refresh_shared_bests(&mut self.state);
        self.fitness = fitness;
        self.state.k += 1;
        self.evaluations += self.fitness.len() as u64;
        Ok(())
    }

    /// Installs bests from externally computed fitness of the current
    /// positions. `+inf` marks a discarded candidate.
    pub fn observe(&mut self, fitness: &[f64]) -> Result<()> {
        update_bests(&mut self.state, fitness)?;
        self.fitness.copy_from_slice(fitness);
        self.state.k += 1;
        self.evaluations += fitness.len() as u64;
        Ok(())
    }

    /// Kinematic update using the inertia of the current iteration.
    pub fn advance(&mut self) -> Result<()> {
        let factors = RandomFactors::draw(&mut self.rng, self.state.population());
        let k = self.state.k.min(self.horizon);
        step_in_place(&mut self.state, &self.hypers, &self.bounds, &factors, k, self.horizon)
    }
}

/// Runs the batched swarm for exactly `iterations` iterations.
pub fn run_dtpso<P: FitnessProblem + ?Sized>(
    problem: &P,
    hypers: &HyperMatrix,
    particles: usize,
    iterations: usize,
    seed: u64,
) -> Result<RunReport> {
    if iterations == 0 {
        return Err(Error::InvalidArgument("iteration count must be at least 1".into()));
    }
    let started = Instant::now();
    let mut swarm = TensorSwarm::new(
        hypers.clone(),
        problem.bounds().clone(),
        particles,
        iterations,
        RngStream::new(seed),
    )?;
    let mut trace = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        swarm.evaluate(problem)?;
        trace.push(swarm.best().1);
        swarm.advance()?;
    }
    let (point, fitness) = swarm.best();
    Ok(RunReport {
        seed,
        iterations,
        trace,
        final_point: point.to_vec(),
        final_fitness: fitness,
        evaluations: swarm.evaluations(),
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}

/// Hyper-parameters of the single-swarm baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsoParams {
    pub c1: f64,
    pub c2: f64,
    pub omega_init: f64,
    pub omega_end: f64,
    pub v_limit: f64,
}

impl Default for PsoParams {
    fn default() -> Self {
        Self {
            c1: 2.0,
            c2: 2.0,
            omega_init: 0.9,
            omega_end: 0.4,
            v_limit: 0.5,
        }
    }
}

impl PsoParams {
    pub fn validate(&self) -> Result<()> {
        HyperRow::new(self.c1, self.c2, 0.0, self.omega_init, self.omega_end, self.v_limit).validate()
    }
}

struct Particle {
    x: Vec<f64>,
    v: Vec<f64>,
    best_x: Vec<f64>,
    best_f: f64,
}

struct Group {
    hyper: HyperRow,
    particles: Vec<Particle>,
    best_x: Vec<f64>,
    best_f: f64,
}

fn linear_inertia(omega_init: f64, omega_end: f64, k: usize, total: usize) -> f64 {
    if k == total {
        omega_end
    } else {
        omega_init - (omega_init - omega_end) * (k as f64 / total as f64)
    }
}

fn check_finite(f: f64, group: usize, particle: usize) -> Result<f64> {
    if f.is_finite() {
        Ok(f)
    } else {
        Err(Error::NonFiniteFitness {
            group,
            particle,
            value: f,
        })
    }
}

/// Particle-by-particle grouped swarm with a shared population best.
///
/// Reference implementation of the grouped update; single-threaded.
pub fn run_dppso_reference<P: FitnessProblem + ?Sized>(
    problem: &P,
    hypers: &HyperMatrix,
    particles: usize,
    iterations: usize,
    seed: u64,
) -> Result<RunReport> {
    if iterations == 0 {
        return Err(Error::InvalidArgument("iteration count must be at least 1".into()));
    }
    if particles == 0 {
        return Err(Error::InvalidArgument("particles per group must be at least 1".into()));
    }
    let started = Instant::now();
    let bounds = problem.bounds();
    let dim = bounds.dim();
    let lo = bounds.lo();
    let hi = bounds.hi();
    let mut rng = RngStream::new(seed);

    let mut positions = Vec::new();
    for _ in 0..hypers.groups() * particles {
        let mut x = vec![0.0; dim];
        for d in 0..dim {
            x[d] = rng.uniform_in(lo[d], hi[d]);
        }
        positions.push(x);
    }
    let mut positions = positions.into_iter();
    let mut groups: Vec<Group> = Vec::new();
    for hyper in hypers.rows() {
        let mut members = Vec::new();
        for _ in 0..particles {
            let x = positions.next().expect("one position per particle");
            let mut v = vec![0.0; dim];
            for d in 0..dim {
                let vmax = hyper.v_limit * (0.5 * (hi[d] - lo[d]));
                v[d] = rng.uniform_in(-vmax, vmax);
            }
            members.push(Particle {
                best_x: x.clone(),
                x,
                v,
                best_f: f64::INFINITY,
            });
        }
        groups.push(Group {
            hyper: *hyper,
            best_x: members[0].x.clone(),
            best_f: f64::INFINITY,
            particles: members,
        });
    }
    let mut tbest_x = groups[0].particles[0].x.clone();
    let mut tbest_f = f64::INFINITY;

    let mut trace = Vec::with_capacity(iterations);
    let mut evaluations = 0u64;
    for k in 1..=iterations {
        for (g, group) in groups.iter_mut().enumerate() {
            for (n, p) in group.particles.iter_mut().enumerate() {
                let f = check_finite(problem.evaluate(&p.x), g, n)?;
                evaluations += 1;
                if f < p.best_f {
                    p.best_f = f;
                    p.best_x = p.x.clone();
                }
            }
        }
        for group in groups.iter_mut() {
            for p in &group.particles {
                if p.best_f < group.best_f {
                    group.best_f = p.best_f;
                    group.best_x = p.best_x.clone();
                }
            }
        }
        for group in &groups {
            if group.best_f < tbest_f {
                tbest_f = group.best_f;
                tbest_x = group.best_x.clone();
            }
        }
        trace.push(tbest_f);

        let population = groups.len() * particles;
        let mut r = [vec![0.0; population], vec![0.0; population], vec![0.0; population]];
        for draws in r.iter_mut() {
            for slot in draws.iter_mut() {
                *slot = rng.uniform();
            }
        }
        for (g, group) in groups.iter_mut().enumerate() {
            let h = group.hyper;
            let w = linear_inertia(h.omega_init, h.omega_end, k, iterations);
            for (n, p) in group.particles.iter_mut().enumerate() {
                let i = g * particles + n;
                let (r1, r2, r3) = (r[0][i], r[1][i], r[2][i]);
                for d in 0..dim {
                    let vmax = h.v_limit * (0.5 * (hi[d] - lo[d]));
                    let mut vel = w * p.v[d]
                        + h.c1 * r1 * (p.best_x[d] - p.x[d])
                        + h.c2 * r2 * (group.best_x[d] - p.x[d])
                        + h.c3 * r3 * (tbest_x[d] - p.x[d]);
                    if vel > vmax {
                        vel = vmax;
                    } else if vel < -vmax {
                        vel = -vmax;
                    }
                    p.v[d] = vel;
                    let mut pos = p.x[d] + vel;
                    if pos > hi[d] {
                        pos = hi[d];
                    } else if pos < lo[d] {
                        pos = lo[d];
                    }
                    p.x[d] = pos;
                }
            }
        }
    }
    Ok(RunReport {
        seed,
        iterations,
        trace,
        final_point: tbest_x,
        final_fitness: tbest_f,
        evaluations,
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}

/// Classic single-swarm particle swarm with a global best, `swarm_size`
/// particles.
///
/// Random factors are one scalar per particle per term; each iteration draws
/// all `R1` values, then all `R2` values.
pub fn run_pso_reference<P: FitnessProblem + ?Sized>(
    problem: &P,
    params: &PsoParams,
    swarm_size: usize,
    iterations: usize,
    seed: u64,
) -> Result<RunReport> {
    params.validate()?;
    if iterations == 0 {
        return Err(Error::InvalidArgument("iteration count must be at least 1".into()));
    }
    if swarm_size == 0 {
        return Err(Error::InvalidArgument("swarm size must be at least 1".into()));
    }
    let started = Instant::now();
    let bounds = problem.bounds();
    let dim = bounds.dim();
    let (lo, hi) = (bounds.lo(), bounds.hi());
    let vmax: Vec<f64> = (0..dim).map(|d| params.v_limit * (0.5 * (hi[d] - lo[d]))).collect();
    let mut rng = RngStream::new(seed);

    let xs: Vec<Vec<f64>> = (0..swarm_size)
        .map(|_| (0..dim).map(|d| rng.uniform_in(lo[d], hi[d])).collect())
        .collect();
    let mut swarm: Vec<Particle> = xs
        .into_iter()
        .map(|x| {
            let v = (0..dim).map(|d| rng.uniform_in(-vmax[d], vmax[d])).collect();
            Particle {
                best_x: x.clone(),
                x,
                v,
                best_f: f64::INFINITY,
            }
        })
        .collect();
    let mut gbest_x = swarm[0].x.clone();
    let mut gbest_f = f64::INFINITY;

    let mut trace = Vec::with_capacity(iterations);
    let mut evaluations = 0u64;
    for k in 1..=iterations {
        for (i, p) in swarm.iter_mut().enumerate() {
            let f = check_finite(problem.evaluate(&p.x), 0, i)?;
            evaluations += 1;
            if f < p.best_f {
                p.best_f = f;
                p.best_x.copy_from_slice(&p.x);
            }
        }
        for p in &swarm {
            if p.best_f < gbest_f {
                gbest_f = p.best_f;
                gbest_x.copy_from_slice(&p.best_x);
            }
        }
        trace.push(gbest_f);

        let w = linear_inertia(params.omega_init, params.omega_end, k, iterations);
        let r1: Vec<f64> = (0..swarm_size).map(|_| rng.uniform()).collect();
        let r2: Vec<f64> = (0..swarm_size).map(|_| rng.uniform()).collect();
        for (i, p) in swarm.iter_mut().enumerate() {
            for d in 0..dim {
                let vel =
                    w * p.v[d] + params.c1 * r1[i] * (p.best_x[d] - p.x[d]) + params.c2 * r2[i] * (gbest_x[d] - p.x[d]);
                p.v[d] = vel.clamp(-vmax[d], vmax[d]);
                p.x[d] = (p.x[d] + p.v[d]).clamp(lo[d], hi[d]);
            }
        }
    }
    Ok(RunReport {
        seed,
        iterations,
        trace,
        final_point: gbest_x,
        final_fitness: gbest_f,
        evaluations,
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{CountingProblem, FnProblem};
    use crate::swarm::HyperRow;
    use proptest::prelude::*;

    fn sphere(dim: usize) -> FnProblem<impl Fn(&[f64]) -> f64 + Sync> {
        FnProblem::new(
            "sphere",
            SearchBounds::cube(dim, -10.0, 10.0).unwrap(),
            |x: &[f64]| x.iter().map(|v| v * v).sum(),
        )
    }

    #[test]
    fn constant_fitness_trace_is_flat() {
        let p = FnProblem::new("const", SearchBounds::cube(3, -1.0, 1.0).unwrap(), |_: &[f64]| 5.0);
        let r = run_dtpso(&p, &HyperMatrix::diversified_default(), 4, 25, 9).unwrap();
        assert!(r.trace.iter().all(|f| *f == 5.0));
        assert_eq!(r.iterations, 25);
    }

    #[test]
    fn one_iteration_is_one_evaluation_of_the_initial_swarm() {
        let p = sphere(5);
        let h = HyperMatrix::diversified_default();
        let r = run_dtpso(&p, &h, 3, 1, 42).unwrap();
        let init = init_swarm(&h, p.bounds(), 8, 3, 5, &mut RngStream::new(42)).unwrap();
        let best = init
            .x
            .chunks_exact(5)
            .map(|row| p.evaluate(row))
            .fold(f64::INFINITY, f64::min);
        assert_eq!(r.trace, vec![best]);
        assert_eq!(r.final_fitness, best);
    }

    #[test]
    fn evaluation_count_is_population_times_iterations() {
        let p = CountingProblem::new(sphere(4));
        let r = run_dtpso(&p, &HyperMatrix::diversified_default(), 5, 13, 1).unwrap();
        assert_eq!(p.evaluations(), 8 * 5 * 13);
        assert_eq!(r.evaluations, 8 * 5 * 13);
        let q = CountingProblem::new(sphere(4));
        run_dppso_reference(&q, &HyperMatrix::diversified_default(), 5, 13, 1).unwrap();
        assert_eq!(q.evaluations(), 8 * 5 * 13);
    }

    #[test]
    fn non_finite_fitness_names_the_particle() {
        let p = FnProblem::new("nan", SearchBounds::cube(2, -1.0, 1.0).unwrap(), |x: &[f64]| {
            if x[0] > 0.9 {
                f64::NAN
            } else {
                0.0
            }
        });
        let h = HyperMatrix::uniform(HyperRow::new(1.0, 1.0, 1.0, 0.9, 0.4, 0.5), 2).unwrap();
        let err = run_dtpso(&p, &h, 50, 10, 3).unwrap_err();
        let Error::NonFiniteFitness { group, particle, .. } = err else {
            panic!("unexpected error {err:?}");
        };
        let init = init_swarm(&h, p.bounds(), 2, 50, 2, &mut RngStream::new(3)).unwrap();
        assert!(init.position(group, particle)[0] > 0.9);
        let Error::NonFiniteFitness {
            group: g2,
            particle: n2,
            ..
        } = run_dppso_reference(&p, &h, 50, 10, 3).unwrap_err()
        else {
            panic!("reference run should fail on NaN");
        };
        assert_eq!((g2, n2), (group, particle));
    }

    #[test]
    fn update_bests_keeps_state_when_nothing_improves() {
        let mut s = SwarmState::from_parts(1, 2, 1, vec![0.0, 1.0], vec![0.0, 0.0]).unwrap();
        update_bests(&mut s, &[1.0, 2.0]).unwrap();
        let before = s.clone();
        s.x = vec![5.0, 6.0];
        update_bests(&mut s, &[3.0, 2.0]).unwrap();
        assert_eq!(s.pbest_x, before.pbest_x);
        assert_eq!(s.pbest_f, before.pbest_f);
        assert_eq!(s.gbest_x, before.gbest_x);
        assert_eq!(s.tbest_f, before.tbest_f);
    }

    #[test]
    fn update_bests_single_improvement_propagates() {
        let mut s = SwarmState::from_parts(2, 2, 1, vec![0.0, 1.0, 2.0, 3.0], vec![0.0; 4]).unwrap();
        update_bests(&mut s, &[4.0, 5.0, 6.0, 7.0]).unwrap();
        s.x = vec![10.0, 11.0, 12.0, 13.0];
        update_bests(&mut s, &[9.0, 9.0, 9.0, 1.0]).unwrap();
        assert_eq!(s.pbest_x, vec![0.0, 1.0, 2.0, 13.0]);
        assert_eq!(s.gbest_x, vec![0.0, 13.0]);
        assert_eq!(s.gbest_f, vec![4.0, 1.0]);
        assert_eq!((s.tbest_x[0], s.tbest_f), (13.0, 1.0));
    }

    #[test]
    fn update_bests_ties_keep_incumbent() {
        let mut s = SwarmState::from_parts(1, 2, 1, vec![0.0, 1.0], vec![0.0; 2]).unwrap();
        update_bests(&mut s, &[2.0, 2.0]).unwrap();
        assert_eq!(s.gbest_x, vec![0.0]);
        s.x = vec![7.0, 8.0];
        update_bests(&mut s, &[3.0, 2.0]).unwrap();
        assert_eq!(s.pbest_x, vec![0.0, 1.0]);
        assert_eq!(s.tbest_x, vec![0.0]);
    }

    #[test]
    fn pso_pure_inertia_drift() {
        use std::sync::Mutex;
        let seen = Mutex::new(Vec::new());
        let p = FnProblem::new("flat", SearchBounds::cube(2, -1e9, 1e9).unwrap(), |x: &[f64]| {
            seen.lock().unwrap().push(x.to_vec());
            1.0
        });
        let params = PsoParams {
            c1: 0.0,
            c2: 0.0,
            omega_init: 0.9,
            omega_end: 0.4,
            v_limit: 0.5,
        };
        run_pso_reference(&p, &params, 1, 6, 5).unwrap();
        let seen = seen.into_inner().unwrap();

        let mut rng = RngStream::new(5);
        let mut x: Vec<f64> = (0..2).map(|_| rng.uniform_in(-1e9, 1e9)).collect();
        let vmax = 0.5 * 1e9;
        let mut v: Vec<f64> = (0..2).map(|_| rng.uniform_in(-vmax, vmax)).collect();
        assert_eq!(seen[0], x);
        for k in 1..6 {
            let w = 0.9 - (0.9 - 0.4) * (k as f64 / 6.0);
            for d in 0..2 {
                v[d] *= w;
                x[d] = (x[d] + v[d]).clamp(-1e9, 1e9);
            }
            assert_eq!(seen[k], x, "iteration {k}");
        }
    }

    #[test]
    fn pso_same_seed_same_trace() {
        let p = sphere(6);
        let a = run_pso_reference(&p, &PsoParams::default(), 20, 50, 8).unwrap();
        let b = run_pso_reference(&p, &PsoParams::default(), 20, 50, 8).unwrap();
        assert_eq!(a.trace, b.trace);
        assert!(a.trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(*a.trace.last().unwrap() >= 0.0);
    }

    #[test]
    fn single_group_without_population_term_matches_grouped_runs() {
        let p = sphere(3);
        let h = HyperMatrix::uniform(HyperRow::new(1.5, 1.5, 0.0, 0.9, 0.4, 0.5), 1).unwrap();
        let a = run_dtpso(&p, &h, 10, 40, 4).unwrap();
        let b = run_dppso_reference(&p, &h, 10, 40, 4).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.final_point, b.final_point);
    }

    #[test]
    fn report_json_schema() {
        let r = run_dtpso(&sphere(2), &HyperMatrix::diversified_default(), 2, 3, 1).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        for key in ["seed", "iterations", "trace", "final_point", "wall_seconds"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        let back: RunReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }

    fn hyper_matrix(groups: usize) -> impl Strategy<Value = HyperMatrix> {
        prop::collection::vec(
            (
                0.0f64..2.5,
                0.0f64..2.5,
                0.0f64..2.5,
                0.0f64..1.0,
                0.0f64..1.0,
                0.01f64..1.0,
            )
                .prop_map(|(c1, c2, c3, a, b, v)| HyperRow::new(c1, c2, c3, a.max(b), a.min(b), v)),
            groups,
        )
        .prop_map(|rows| HyperMatrix::new(rows).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn tensor_and_per_particle_runs_agree(
            hypers in (1usize..=4).prop_flat_map(hyper_matrix),
            n in 1usize..=8,
            d in 1usize..=8,
            t in 1usize..=20,
            seed in any::<u64>(),
        ) {
            let p = crate::benchmarks::Benchmark::with_dim(crate::benchmarks::BenchmarkId::Rastrigin, d);
            let a = run_dtpso(&p, &hypers, n, t, seed).unwrap();
            let b = run_dppso_reference(&p, &hypers, n, t, seed).unwrap();
            prop_assert_eq!(&a.trace, &b.trace);
            prop_assert_eq!(&a.final_point, &b.final_point);
            prop_assert!(a.trace.windows(2).all(|w| w[1] <= w[0]));
            prop_assert_eq!(a.evaluations, (hypers.groups() * n * t) as u64);
        }

        #[test]
        fn bests_match_a_replay_of_the_history(
            rounds in prop::collection::vec(prop::collection::vec((0u8..6, -3i8..3), 15), 1..6),
        ) {
            let (g, n, d) = (3, 5, 2);
            let mut state = SwarmState::from_parts(g, n, d, vec![0.0; g * n * d], vec![0.0; g * n * d]).unwrap();
            let mut history: Vec<(Vec<f64>, Vec<f64>)> = vec![];
            for round in &rounds {
                // Integer fitness values make ties common.
                let fitness: Vec<f64> = round.iter().map(|(f, _)| *f as f64).collect();
                state.x = round.iter().flat_map(|(_, x)| [*x as f64, history.len() as f64]).collect();
                history.push((state.x.clone(), fitness.clone()));
                update_bests(&mut state, &fitness).unwrap();
            }
            for i in 0..g * n {
                // Personal best: the first round attaining the particle's minimum.
                let (t, f) = history
                    .iter()
                    .enumerate()
                    .fold((0, f64::INFINITY), |acc, (t, (_, fit))| if fit[i] < acc.1 { (t, fit[i]) } else { acc });
                prop_assert_eq!(state.pbest_f[i], f);
                prop_assert_eq!(&state.pbest_x[i * d..(i + 1) * d], &history[t].0[i * d..(i + 1) * d]);
            }
            for grp in 0..g {
                let best = state.pbest_f[grp * n..(grp + 1) * n].iter().copied().fold(f64::INFINITY, f64::min);
                prop_assert_eq!(state.gbest_f[grp], best);
                let holder = (grp * n..(grp + 1) * n).any(|i| {
                    state.pbest_f[i] == best && state.pbest_x[i * d..(i + 1) * d] == state.gbest_x[grp * d..(grp + 1) * d]
                });
                prop_assert!(holder);
            }
            prop_assert_eq!(state.tbest_f, state.gbest_f.iter().copied().fold(f64::INFINITY, f64::min));
        }
    }
}
