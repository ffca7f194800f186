//! The evaluation surface every optimizer in the crate minimizes.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::swarm::SearchBounds;

/// A minimization problem over a box.
///
/// `evaluate` must be deterministic and free of side effects for a fixed
/// input; lower values are better.
pub trait FitnessProblem: Sync {
    fn name(&self) -> &str;

    fn bounds(&self) -> &SearchBounds;

    fn dim(&self) -> usize {
        self.bounds().dim()
    }

    /// Fitness of a single point.
    fn evaluate(&self, x: &[f64]) -> f64;

    /// Fitness of every row of a row-major `(M, D)` position block.
    ///
    /// Implementations may batch work across rows but must return exactly
    /// what `evaluate` returns for each row.
    fn evaluate_batch(&self, positions: &[f64], out: &mut [f64]) {
        let dim = self.dim();
        for (row, f) in positions.chunks_exact(dim).zip(out.iter_mut()) {
            *f = self.evaluate(row);
        }
    }
}

impl<P: FitnessProblem + ?Sized> FitnessProblem for &P {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn bounds(&self) -> &SearchBounds {
        (**self).bounds()
    }
    fn evaluate(&self, x: &[f64]) -> f64 {
        (**self).evaluate(x)
    }
    fn evaluate_batch(&self, positions: &[f64], out: &mut [f64]) {
        (**self).evaluate_batch(positions, out)
    }
}

/// Problem defined by a closure.
pub struct FnProblem<F> {
    name: String,
    bounds: SearchBounds,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnProblem<F> {
    pub fn new(name: impl Into<String>, bounds: SearchBounds, f: F) -> Self {
        Self {
            name: name.into(),
            bounds,
            f,
        }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> FitnessProblem for FnProblem<F> {
    fn name(&self) -> &str {
        &self.name
    }
    fn bounds(&self) -> &SearchBounds {
        &self.bounds
    }
    fn evaluate(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

/// Wraps a problem and counts single-point evaluations.
pub struct CountingProblem<P> {
    inner: P,
    count: AtomicU64,
}

impl<P: FitnessProblem> CountingProblem<P> {
    pub fn new(inner: P) -> Self {
        Self {
            inner,
            count: AtomicU64::new(0),
        }
    }

    pub fn evaluations(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }

    pub fn into_inner(self) -> P {
        self.inner
    }
}

impl<P: FitnessProblem> FitnessProblem for CountingProblem<P> {
    fn name(&self) -> &str {
        self.inner.name()
    }
    fn bounds(&self) -> &SearchBounds {
        self.inner.bounds()
    }
    fn evaluate(&self, x: &[f64]) -> f64 {
        self.count.fetch_add(1, Ordering::Relaxed);
        self.inner.evaluate(x)
    }
    fn evaluate_batch(&self, positions: &[f64], out: &mut [f64]) {
        let rows = positions.len() / self.dim().max(1);
        self.count.fetch_add(rows as u64, Ordering::Relaxed);
        self.inner.evaluate_batch(positions, out)
    }
}
