//! Batched swarm kinematics.
//!
//! A population is held as dense `(G, N, D)` tensors (groups, particles per
//! group, problem dimension) stored row-major in flat `Vec<f64>`s. One call to
//! [`step_in_place`] advances every particle of every group:
//!
//! ```text
//! V' = clip_V( ω_g·V + C1_g·R1·(Pbest − X) + C2_g·R2·(Gbest_g − X) + C3_g·R3·(Tbest − X) )
//! X' = clip_X( X + V' )
//! ```
//!
//! with one random scalar per `(g, n)` pair for each of `R1`, `R2`, `R3`,
//! broadcast over the `D` coordinates. Fitness semantics live elsewhere.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::rng::RngStream;

/// Behavioral hyper-parameters of one group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperRow {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub omega_init: f64,
    pub omega_end: f64,
    /// Velocity limit as a fraction of each coordinate's search span.
    pub v_limit: f64,
}

impl HyperRow {
    pub const fn new(c1: f64, c2: f64, c3: f64, omega_init: f64, omega_end: f64, v_limit: f64) -> Self {
        Self {
            c1,
            c2,
            c3,
            omega_init,
            omega_end,
            v_limit,
        }
    }

    pub fn to_array(self) -> [f64; 6] {
        [self.c1, self.c2, self.c3, self.omega_init, self.omega_end, self.v_limit]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        Self::new(a[0], a[1], a[2], a[3], a[4], a[5])
    }

    pub fn validate(&self) -> Result<()> {
        let all = self.to_array();
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidHyper(format!("non-finite entry in {self:?}")));
        }
        if self.c1 < 0.0 || self.c2 < 0.0 || self.c3 < 0.0 {
            return Err(Error::InvalidHyper(format!(
                "negative acceleration constant in {self:?}"
            )));
        }
        if !(0.0 <= self.omega_end && self.omega_end <= self.omega_init && self.omega_init <= 1.0) {
            return Err(Error::InvalidHyper(format!(
                "inertia endpoints must satisfy 0 <= omega_end <= omega_init <= 1, got {} and {}",
                self.omega_end, self.omega_init
            )));
        }
        if !(self.v_limit > 0.0 && self.v_limit <= 1.0) {
            return Err(Error::InvalidHyper(format!(
                "v_limit must lie in (0, 1], got {}",
                self.v_limit
            )));
        }
        Ok(())
    }
}

/// Per-group hyper-parameters, shape `(G, 6)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<HyperRow>", into = "Vec<HyperRow>")]
pub struct HyperMatrix {
    rows: Vec<HyperRow>,
}

impl TryFrom<Vec<HyperRow>> for HyperMatrix {
    type Error = Error;

    fn try_from(rows: Vec<HyperRow>) -> Result<Self> {
        Self::new(rows)
    }
}

impl From<HyperMatrix> for Vec<HyperRow> {
    fn from(m: HyperMatrix) -> Self {
        m.rows
    }
}

impl HyperMatrix {
    pub fn new(rows: Vec<HyperRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidHyper("at least one group is required".into()));
        }
        for row in &rows {
            row.validate()?;
        }
        Ok(Self { rows })
    }

    /// The same row repeated for `groups` groups.
    pub fn uniform(row: HyperRow, groups: usize) -> Result<Self> {
        Self::new(vec![row; groups])
    }

    /// Eight-group defaults used for the group-diversified swarm and for the
    /// outer hyper-parameter search.
    pub fn diversified_default() -> Self {
        Self {
            rows: vec![
                HyperRow::new(2.0, 1.0, 1.0, 0.4, 0.2, 0.2),
                HyperRow::new(1.0, 1.0, 2.0, 0.7, 0.3, 0.1),
                HyperRow::new(2.0, 2.0, 1.0, 0.8, 0.1, 0.6),
                HyperRow::new(2.0, 2.0, 1.0, 0.8, 0.6, 0.4),
                HyperRow::new(2.0, 1.0, 2.0, 0.2, 0.1, 0.3),
                HyperRow::new(2.0, 1.0, 2.0, 0.9, 0.5, 0.5),
                HyperRow::new(1.0, 2.0, 2.0, 0.4, 0.1, 0.8),
                HyperRow::new(1.0, 2.0, 2.0, 0.9, 0.3, 0.3),
            ],
        }
    }

    /// Evolved hyper-parameters for 16-dimensional path planning.
    pub fn path_planning_evolved() -> Self {
        Self {
            rows: vec![
                HyperRow::new(1.53, 1.29, 1.34, 0.48, 0.19, 0.35),
                HyperRow::new(1.72, 1.53, 1.34, 0.73, 0.28, 0.32),
                HyperRow::new(1.34, 1.42, 1.33, 0.48, 0.21, 0.62),
                HyperRow::new(1.76, 1.60, 1.21, 0.47, 0.30, 0.63),
                HyperRow::new(1.68, 1.27, 1.25, 0.73, 0.36, 0.41),
                HyperRow::new(1.66, 1.54, 1.54, 0.39, 0.16, 0.45),
                HyperRow::new(1.57, 1.48, 1.75, 0.56, 0.34, 0.38),
                HyperRow::new(1.31, 1.71, 1.23, 0.36, 0.25, 0.50),
            ],
        }
    }

    pub fn groups(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[HyperRow] {
        &self.rows
    }

    pub fn row(&self, g: usize) -> &HyperRow {
        &self.rows[g]
    }
}

/// Box constraints of the search space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchBounds {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl SearchBounds {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        check_len("search bounds", lo.len(), hi.len())?;
        if lo.is_empty() {
            return Err(Error::InvalidBounds("dimension must be at least 1".into()));
        }
        for (d, (l, h)) in lo.iter().zip(&hi).enumerate() {
            if !l.is_finite() || !h.is_finite() {
                return Err(Error::InvalidBounds(format!("non-finite bound in dimension {d}")));
            }
            if l >= h {
                return Err(Error::InvalidBounds(format!(
                    "dimension {d}: lower bound {l} is not below upper bound {h}"
                )));
            }
        }
        Ok(Self { lo, hi })
    }

    /// The same interval in every dimension.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn span(&self, d: usize) -> f64 {
        self.hi[d] - self.lo[d]
    }

    /// Velocity limit per coordinate for a group with the given `v_limit`:
    /// `v_limit` times the half-width of the interval, so that a box
    /// `[-r, r]` gives velocities in `[-v_limit·r, v_limit·r]`.
    pub fn velocity_limits(&self, v_limit: f64) -> Vec<f64> {
        (0..self.dim()).map(|d| v_limit * (0.5 * self.span(d))).collect()
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dim()
            && point
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(x, (l, h))| *l <= *x && *x <= *h)
    }
}

/// Position, velocity and best-so-far bookkeeping for a grouped swarm.
#[derive(Debug, Clone, PartialEq)]
pub struct SwarmState {
    pub groups: usize,
    pub particles: usize,
    pub dim: usize,
    /// Positions, `(G, N, D)`.
    pub x: Vec<f64>,
    /// Velocities, `(G, N, D)`.
    pub v: Vec<f64>,
    /// Personal best positions, `(G, N, D)`.
    pub pbest_x: Vec<f64>,
    /// Personal best fitness, `(G, N)`.
    pub pbest_f: Vec<f64>,
    /// Group best positions, `(G, D)`.
    pub gbest_x: Vec<f64>,
    pub gbest_f: Vec<f64>,
    /// Whole-population best position, `(D)`.
    pub tbest_x: Vec<f64>,
    pub tbest_f: f64,
    /// Completed iterations.
    pub k: usize,
}

impl SwarmState {
    /// Builds a fresh state from explicit positions and velocities. All best
    /// fitness values start at `+inf` so the first evaluation installs them.
    pub fn from_parts(groups: usize, particles: usize, dim: usize, x: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if groups == 0 || particles == 0 || dim == 0 {
            return Err(Error::InvalidArgument(format!(
                "swarm shape must be positive, got ({groups}, {particles}, {dim})"
            )));
        }
        let total = groups * particles * dim;
        check_len("positions", total, x.len())?;
        check_len("velocities", total, v.len())?;
        let row = particles * dim;
        let gbest_x = (0..groups)
            .flat_map(|g| x[g * row..g * row + dim].iter().copied())
            .collect();
        let tbest_x = x[..dim].to_vec();
        Ok(Self {
            groups,
            particles,
            dim,
            pbest_x: x.clone(),
            x,
            v,
            pbest_f: vec![f64::INFINITY; groups * particles],
            gbest_x,
            gbest_f: vec![f64::INFINITY; groups],
            tbest_x,
            tbest_f: f64::INFINITY,
            k: 0,
        })
    }

    pub fn population(&self) -> usize {
        self.groups * self.particles
    }

    /// Position of particle `(g, n)`.
    pub fn position(&self, g: usize, n: usize) -> &[f64] {
        let start = (g * self.particles + n) * self.dim;
        &self.x[start..start + self.dim]
    }

    pub fn gbest(&self, g: usize) -> &[f64] {
        &self.gbest_x[g * self.dim..(g + 1) * self.dim]
    }

    /// True when every position lies in `bounds` and every velocity inside
    /// its group's velocity interval.
    pub fn within_limits(&self, hypers: &HyperMatrix, bounds: &SearchBounds) -> bool {
        let (lo, hi) = (bounds.lo(), bounds.hi());
        for g in 0..self.groups {
            let vmax = bounds.velocity_limits(hypers.row(g).v_limit);
            for n in 0..self.particles {
                let start = (g * self.particles + n) * self.dim;
                for d in 0..self.dim {
                    let x = self.x[start + d];
                    let v = self.v[start + d];
                    if x < lo[d] || x > hi[d] || v < -vmax[d] || v > vmax[d] {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn check_shape(&self, hypers: &HyperMatrix, bounds: &SearchBounds) -> Result<()> {
        check_len("hyper-matrix groups", self.groups, hypers.groups())?;
        check_len("bounds dimension", self.dim, bounds.dim())?;
        Ok(())
    }
}

/// Inertia weight of every group at iteration `k` of a `total`-iteration run.
pub fn inertia_at(hypers: &HyperMatrix, k: usize, total: usize) -> Result<Vec<f64>> {
    if total == 0 {
        return Err(Error::InvalidArgument("total iterations must be at least 1".into()));
    }
    if k > total {
        return Err(Error::InvalidArgument(format!("iteration {k} exceeds total {total}")));
    }
    let frac = k as f64 / total as f64;
    Ok(hypers
        .rows()
        .iter()
        .map(|r| {
            if k == total {
                r.omega_end
            } else {
                r.omega_init - (r.omega_init - r.omega_end) * frac
            }
        })
        .collect())
}

/// The three random scalars per particle used by one kinematic step.
///
/// Draw order is fixed: all `R1` values row-major over `(g, n)`, then all
/// `R2`, then all `R3`.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomFactors {
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
    pub r3: Vec<f64>,
}

impl RandomFactors {
    pub fn draw(rng: &mut RngStream, population: usize) -> Self {
        let mut r1 = vec![0.0; population];
        let mut r2 = vec![0.0; population];
        let mut r3 = vec![0.0; population];
        rng.fill_uniform(&mut r1);
        rng.fill_uniform(&mut r2);
        rng.fill_uniform(&mut r3);
        Self { r1, r2, r3 }
    }
}

/// Componentwise saturation of `values` to `[lo, hi]`.
pub fn clip(values: &mut [f64], lo: &[f64], hi: &[f64]) {
    for ((v, l), h) in values.iter_mut().zip(lo).zip(hi) {
        *v = v.clamp(*l, *h);
    }
}

/// Uniform initial swarm: positions over the search box, then velocities over
/// each group's velocity interval.
pub fn init_swarm(
    hypers: &HyperMatrix,
    bounds: &SearchBounds,
    groups: usize,
    particles: usize,
    dim: usize,
    rng: &mut RngStream,
) -> Result<SwarmState> {
    check_len("hyper-matrix groups", groups, hypers.groups())?;
    check_len("bounds dimension", dim, bounds.dim())?;
    let mut x = vec![0.0; groups * particles * dim];
    for row in x.chunks_exact_mut(dim.max(1)) {
        for (d, slot) in row.iter_mut().enumerate() {
            *slot = rng.uniform_in(bounds.lo()[d], bounds.hi()[d]);
        }
    }
    swarm_from_positions(x, hypers, bounds, groups, particles, rng)
}

/// Completes a state from given positions by drawing velocities uniformly in
/// `[-vmax, vmax]` per group, with `vmax` from [`SearchBounds::velocity_limits`].
pub fn swarm_from_positions(
    x: Vec<f64>,
    hypers: &HyperMatrix,
    bounds: &SearchBounds,
    groups: usize,
    particles: usize,
    rng: &mut RngStream,
) -> Result<SwarmState> {
    check_len("hyper-matrix groups", groups, hypers.groups())?;
    let dim = bounds.dim();
    let mut v = vec![0.0; x.len()];
    for g in 0..groups {
        let vmax = bounds.velocity_limits(hypers.row(g).v_limit);
        let block = &mut v[g * particles * dim..(g + 1) * particles * dim];
        for row in block.chunks_exact_mut(dim) {
            for (slot, m) in row.iter_mut().zip(&vmax) {
                *slot = rng.uniform_in(-m, *m);
            }
        }
    }
    SwarmState::from_parts(groups, particles, dim, x, v)
}

/// Advances the swarm one iteration, drawing random factors from `rng`.
///
/// `k` is the (1-based) iteration whose inertia weight is applied and
/// `total` the run length of the inertia schedule.
pub fn step(
    state: &SwarmState,
    hypers: &HyperMatrix,
    bounds: &SearchBounds,
    rng: &mut RngStream,
    k: usize,
    total: usize,
) -> Result<SwarmState> {
    let mut next = state.clone();
    let factors = RandomFactors::draw(rng, state.population());
    step_in_place(&mut next, hypers, bounds, &factors, k, total)?;
    Ok(next)
}

/// In-place kinematic update with pre-drawn random factors.
pub fn step_in_place(
    state: &mut SwarmState,
    hypers: &HyperMatrix,
    bounds: &SearchBounds,
    factors: &RandomFactors,
    k: usize,
    total: usize,
) -> Result<()> {
    state.check_shape(hypers, bounds)?;
    let population = state.population();
    check_len("random factors", population, factors.r1.len())?;
    check_len("random factors", population, factors.r2.len())?;
    check_len("random factors", population, factors.r3.len())?;
    let omega = inertia_at(hypers, k, total)?;

    let dim = state.dim;
    let n_per = state.particles;
    let (lo, hi) = (bounds.lo(), bounds.hi());
    let SwarmState {
        x,
        v,
        pbest_x,
        gbest_x,
        tbest_x,
        ..
    } = state;

    for (g, hyper) in hypers.rows().iter().enumerate() {
        let vmax = bounds.velocity_limits(hyper.v_limit);
        let gb = &gbest_x[g * dim..(g + 1) * dim];
        let block = g * n_per * dim..(g + 1) * n_per * dim;
        let rows = x[block.clone()]
            .chunks_exact_mut(dim)
            .zip(v[block.clone()].chunks_exact_mut(dim))
            .zip(pbest_x[block].chunks_exact(dim));
        for (n, ((xr, vr), pr)) in rows.enumerate() {
            let i = g * n_per + n;
            let a1 = hyper.c1 * factors.r1[i];
            let a2 = hyper.c2 * factors.r2[i];
            let a3 = hyper.c3 * factors.r3[i];
            advance_row(xr, vr, pr, gb, tbest_x, &vmax, lo, hi, [omega[g], a1, a2, a3]);
        }
    }
    Ok(())
}

#[inline]
#[allow(clippy::too_many_arguments)]
fn advance_row(
    x: &mut [f64],
    v: &mut [f64],
    pbest: &[f64],
    gbest: &[f64],
    tbest: &[f64],
    vmax: &[f64],
    lo: &[f64],
    hi: &[f64],
    [w, a1, a2, a3]: [f64; 4],
) {
    let n = x.len();
    let (v, pbest, gbest, tbest) = (&mut v[..n], &pbest[..n], &gbest[..n], &tbest[..n]);
    let (vmax, lo, hi) = (&vmax[..n], &lo[..n], &hi[..n]);
    for d in 0..n {
        let xd = x[d];
        let vel = w * v[d] + a1 * (pbest[d] - xd) + a2 * (gbest[d] - xd) + a3 * (tbest[d] - xd);
        let vel = saturate(vel, -vmax[d], vmax[d]);
        v[d] = vel;
        x[d] = saturate(xd + vel, lo[d], hi[d]);
    }
}

/// Branch-free saturation; equals `f64::clamp` for non-NaN input.
#[inline(always)]
fn saturate(v: f64, lo: f64, hi: f64) -> f64 {
    let v = if v < lo { lo } else { v };
    if v > hi {
        hi
    } else {
        v
    }
}
