//! Standard test functions: Sphere, Rosenbrock, Rastrigin and Griewank.
//!
//! Each function is written once as a lane kernel over `L` rows. The scalar
//! entry points run it with one lane; batched evaluation runs four rows side
//! by side so their independent accumulation chains overlap. Every lane
//! performs the same operations in the same order as the scalar path, so the
//! two agree bit for bit.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::FitnessProblem;
use crate::swarm::SearchBounds;

/// Default dimension of the benchmark suite.
pub const DIM: usize = 30;
/// Default search interval, per coordinate.
pub const RANGE: (f64, f64) = (-600.0, 600.0);

const LANES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BenchmarkId {
    #[serde(rename = "BF1")]
    Sphere,
    #[serde(rename = "BF2")]
    Rosenbrock,
    #[serde(rename = "BF3")]
    Rastrigin,
    #[serde(rename = "BF4")]
    Griewank,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Unimodal,
    Multimodal,
}

impl BenchmarkId {
    pub const ALL: [BenchmarkId; 4] = [
        BenchmarkId::Sphere,
        BenchmarkId::Rosenbrock,
        BenchmarkId::Rastrigin,
        BenchmarkId::Griewank,
    ];

    pub fn code(self) -> &'static str {
        match self {
            BenchmarkId::Sphere => "BF1",
            BenchmarkId::Rosenbrock => "BF2",
            BenchmarkId::Rastrigin => "BF3",
            BenchmarkId::Griewank => "BF4",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BenchmarkId::Sphere => "sphere",
            BenchmarkId::Rosenbrock => "rosenbrock",
            BenchmarkId::Rastrigin => "rastrigin",
            BenchmarkId::Griewank => "griewank",
        }
    }

    pub fn modality(self) -> Modality {
        match self {
            BenchmarkId::Sphere | BenchmarkId::Rosenbrock => Modality::Unimodal,
            BenchmarkId::Rastrigin | BenchmarkId::Griewank => Modality::Multimodal,
        }
    }

    /// Known global minimum value.
    pub fn minimum(self) -> f64 {
        0.0
    }

    /// Canonical minimizer in `dim` dimensions.
    pub fn argmin(self, dim: usize) -> Vec<f64> {
        match self {
            BenchmarkId::Rosenbrock => vec![1.0; dim],
            _ => vec![0.0; dim],
        }
    }
}

impl fmt::Display for BenchmarkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for BenchmarkId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let wanted = s.trim();
        BenchmarkId::ALL
            .into_iter()
            .find(|id| id.code().eq_ignore_ascii_case(wanted) || id.name().eq_ignore_ascii_case(wanted))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown benchmark '{s}', expected one of BF1..BF4")))
    }
}

/// A benchmark function bound to a dimension and search box.
#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    id: BenchmarkId,
    bounds: SearchBounds,
}

impl Benchmark {
    /// The standard 30-dimensional instance over `[-600, 600]^30`.
    pub fn standard(id: BenchmarkId) -> Self {
        Self::with_dim(id, DIM)
    }

    pub fn with_dim(id: BenchmarkId, dim: usize) -> Self {
        let bounds = SearchBounds::cube(dim.max(1), RANGE.0, RANGE.1).expect("valid benchmark box");
        Self { id, bounds }
    }

    pub fn with_bounds(id: BenchmarkId, bounds: SearchBounds) -> Self {
        Self { id, bounds }
    }

    /// Registry lookup by id string (`"BF1"` ... `"BF4"`).
    pub fn lookup(code: &str) -> Result<Self> {
        Ok(Self::standard(code.parse()?))
    }

    pub fn id(&self) -> BenchmarkId {
        self.id
    }
}

impl FitnessProblem for Benchmark {
    fn name(&self) -> &str {
        self.id.code()
    }

    fn bounds(&self) -> &SearchBounds {
        &self.bounds
    }

    fn evaluate(&self, x: &[f64]) -> f64 {
        evaluate_one(self.id, x)
    }

    fn evaluate_batch(&self, positions: &[f64], out: &mut [f64]) {
        evaluate_rows(self.id, positions, self.dim(), out)
    }
}

fn evaluate_one(id: BenchmarkId, x: &[f64]) -> f64 {
    match id {
        BenchmarkId::Sphere => sphere_lanes([x])[0],
        BenchmarkId::Rosenbrock => rosenbrock_lanes([x])[0],
        BenchmarkId::Rastrigin => rastrigin_lanes([x])[0],
        BenchmarkId::Griewank => griewank_lanes([x])[0],
    }
}

/// Batched evaluation of a row-major `(M, dim)` block.
pub fn evaluate_rows(id: BenchmarkId, positions: &[f64], dim: usize, out: &mut [f64]) {
    let mut blocks = positions.chunks_exact(dim * LANES);
    let mut outs = out.chunks_exact_mut(LANES);
    for (block, o) in (&mut blocks).zip(&mut outs) {
        let rows: [&[f64]; LANES] = std::array::from_fn(|l| &block[l * dim..(l + 1) * dim]);
        let vals = match id {
            BenchmarkId::Sphere => sphere_lanes(rows),
            BenchmarkId::Rosenbrock => rosenbrock_lanes(rows),
            BenchmarkId::Rastrigin => rastrigin_lanes(rows),
            BenchmarkId::Griewank => griewank_lanes(rows),
        };
        o.copy_from_slice(&vals);
    }
    for (row, o) in blocks.remainder().chunks_exact(dim).zip(outs.into_remainder()) {
        *o = evaluate_one(id, row);
    }
}

/// `Σ x_i²`
pub fn sphere(x: &[f64]) -> f64 {
    sphere_lanes([x])[0]
}

/// `Σ [100 (x_{i+1} − x_i²)² + (1 − x_i)²]`
pub fn rosenbrock(x: &[f64]) -> f64 {
    rosenbrock_lanes([x])[0]
}

/// `Σ [x_i² − 10 cos(2π x_i) + 10]`
pub fn rastrigin(x: &[f64]) -> f64 {
    rastrigin_lanes([x])[0]
}

/// `1 + Σ x_i² / 4000 − Π cos(x_i / √i)`
pub fn griewank(x: &[f64]) -> f64 {
    griewank_lanes([x])[0]
}

#[inline(always)]
fn trim<const L: usize>(rows: [&[f64]; L]) -> ([&[f64]; L], usize) {
    let dim = rows[0].len();
    (rows.map(|r| &r[..dim]), dim)
}

#[inline]
fn sphere_lanes<const L: usize>(rows: [&[f64]; L]) -> [f64; L] {
    let (rows, dim) = trim(rows);
    let mut acc = [0.0; L];
    for d in 0..dim {
        for l in 0..L {
            let v = rows[l][d];
            acc[l] += v * v;
        }
    }
    acc
}

#[inline]
fn rosenbrock_lanes<const L: usize>(rows: [&[f64]; L]) -> [f64; L] {
    let (rows, dim) = trim(rows);
    let mut acc = [0.0; L];
    for d in 1..dim {
        for l in 0..L {
            let prev = rows[l][d - 1];
            let a = rows[l][d] - prev * prev;
            let b = 1.0 - prev;
            acc[l] += 100.0 * a * a + b * b;
        }
    }
    acc
}

#[inline]
fn rastrigin_lanes<const L: usize>(rows: [&[f64]; L]) -> [f64; L] {
    let (rows, dim) = trim(rows);
    let mut acc = [0.0; L];
    for d in 0..dim {
        for l in 0..L {
            let v = rows[l][d];
            acc[l] += v * v - 10.0 * (TAU * v).cos() + 10.0;
        }
    }
    acc
}

#[inline]
fn griewank_lanes<const L: usize>(rows: [&[f64]; L]) -> [f64; L] {
    let (rows, dim) = trim(rows);
    let mut sum = [0.0; L];
    let mut prod = [1.0; L];
    for d in 0..dim {
        let root = ((d + 1) as f64).sqrt();
        for l in 0..L {
            let v = rows[l][d];
            sum[l] += v * v;
            prod[l] *= (v / root).cos();
        }
    }
    std::array::from_fn(|l| 1.0 + sum[l] / 4000.0 - prod[l])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use proptest::prelude::*;

    // Textbook formulas, written independently of the lane kernels.
    fn sphere_ref(x: &[f64]) -> f64 {
        x.iter().fold(0.0, |a, v| a + v * v)
    }
    fn rosenbrock_ref(x: &[f64]) -> f64 {
        x.windows(2).fold(0.0, |a, w| {
            a + (100.0 * (w[1] - w[0] * w[0]) * (w[1] - w[0] * w[0]) + (1.0 - w[0]) * (1.0 - w[0]))
        })
    }
    fn rastrigin_ref(x: &[f64]) -> f64 {
        x.iter().fold(0.0, |a, v| {
            a + (v * v - 10.0 * (2.0 * std::f64::consts::PI * v).cos() + 10.0)
        })
    }
    fn griewank_ref(x: &[f64]) -> f64 {
        let s = x.iter().fold(0.0, |a, v| a + v * v);
        let p = x
            .iter()
            .enumerate()
            .fold(1.0, |a, (i, v)| a * (v / ((i + 1) as f64).sqrt()).cos());
        1.0 + s / 4000.0 - p
    }

    #[test]
    fn minima_are_zero() {
        for id in BenchmarkId::ALL {
            let b = Benchmark::standard(id);
            let f = b.evaluate(&id.argmin(DIM));
            assert!(f.abs() <= 1e-12, "{id}: {f}");
        }
    }

    #[test]
    fn sphere_hand_value() {
        let mut x = vec![0.0; 30];
        x[0] = 3.0;
        x[1] = 4.0;
        assert_eq!(sphere(&x), 25.0);
    }

    #[test]
    fn matches_textbook_formulas() {
        let mut rng = RngStream::new(17);
        for _ in 0..200 {
            let x: Vec<f64> = (0..30).map(|_| rng.uniform_in(-600.0, 600.0)).collect();
            assert_eq!(sphere(&x), sphere_ref(&x));
            assert_eq!(rastrigin(&x), rastrigin_ref(&x));
            assert_eq!(griewank(&x), griewank_ref(&x));
            assert_eq!(rosenbrock(&x), rosenbrock_ref(&x));
        }
    }

    #[test]
    fn registry_lookup() {
        assert_eq!(Benchmark::lookup("BF3").unwrap().id(), BenchmarkId::Rastrigin);
        assert_eq!("griewank".parse::<BenchmarkId>().unwrap(), BenchmarkId::Griewank);
        assert!(Benchmark::lookup("BF5").is_err());
        let b = Benchmark::standard(BenchmarkId::Sphere);
        assert_eq!(b.dim(), 30);
        assert_eq!(b.bounds().lo()[0], -600.0);
        assert_eq!(BenchmarkId::Rastrigin.modality(), Modality::Multimodal);
    }

    #[test]
    fn non_finite_inputs_propagate() {
        let x = [f64::NAN, 0.0];
        assert!(sphere(&x).is_nan());
        assert!(rastrigin(&[f64::INFINITY]).is_nan() || rastrigin(&[f64::INFINITY]).is_infinite());
    }

    fn point(dim: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-600.0f64..=600.0, dim)
    }

    proptest! {
        #[test]
        fn batch_equals_scalar(rows in 0usize..11, x in point(7..8), seed in any::<u64>()) {
            let mut rng = RngStream::new(seed);
            let mut block = x.clone();
            block.extend((0..rows * 7).map(|_| rng.uniform_in(-600.0, 600.0)));
            for id in BenchmarkId::ALL {
                let b = Benchmark::with_dim(id, 7);
                let mut out = vec![0.0; rows + 1];
                b.evaluate_batch(&block, &mut out);
                for (row, f) in block.chunks_exact(7).zip(&out) {
                    prop_assert_eq!(*f, b.evaluate(row));
                }
            }
        }

        #[test]
        fn sign_flip_symmetry(x in point(1..31), i in any::<prop::sample::Index>()) {
            let mut y = x.clone();
            let j = i.index(y.len());
            y[j] = -y[j];
            prop_assert_eq!(sphere(&x), sphere(&y));
            prop_assert_eq!(rastrigin(&x), rastrigin(&y));
            prop_assert_eq!(griewank(&x), griewank(&y));
        }

        #[test]
        fn non_negative_on_the_domain(x in point(1..31)) {
            prop_assert!(sphere(&x) >= 0.0);
            prop_assert!(rosenbrock(&x) >= 0.0);
            prop_assert!(rastrigin(&x) >= -1e-12);
            prop_assert!(griewank(&x) >= 0.0);
        }
    }
}
