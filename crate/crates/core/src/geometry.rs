//! Polygonal maps and the path-planning fitness.
//!
//! A particle of dimension `D` encodes `D/2` waypoints as
//! `[x_1 .. x_{D/2}, y_1 .. y_{D/2}]`. The path runs start → waypoints →
//! target, and its fitness is its length plus `alpha · Q^beta`, where `Q`
//! counts intersecting (path segment, obstacle edge) pairs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::FitnessProblem;
use crate::swarm::SearchBounds;

/// Half-width of the band in which an orientation counts as collinear.
pub const ORIENTATION_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(self, other: Point2) -> f64 {
        let dx = other.x - self.x;
        let dy = other.y - self.y;
        (dx * dx + dy * dy).sqrt()
    }

    pub fn offset(self, dx: f64, dy: f64) -> Self {
        Self::new(self.x + dx, self.y + dy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObstacleKind {
    Static,
    Dynamic,
}

/// A closed polygon given by its vertices in order, with a velocity in cm/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub vertices: Vec<Point2>,
    pub velocity: Point2,
    pub kind: ObstacleKind,
}

impl Obstacle {
    pub fn new(vertices: Vec<Point2>, velocity: Point2, kind: ObstacleKind) -> Result<Self> {
        let o = Self {
            vertices,
            velocity,
            kind,
        };
        o.validate()?;
        Ok(o)
    }

    /// Axis-aligned rectangle with lower-left corner `(x, y)`.
    pub fn rectangle(x: f64, y: f64, width: f64, height: f64, velocity: Point2, kind: ObstacleKind) -> Result<Self> {
        Self::new(
            vec![
                Point2::new(x, y),
                Point2::new(x + width, y),
                Point2::new(x + width, y + height),
                Point2::new(x, y + height),
            ],
            velocity,
            kind,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.vertices.len() < 3 {
            return Err(Error::InvalidArgument(format!(
                "obstacle needs at least 3 vertices, got {}",
                self.vertices.len()
            )));
        }
        if !self.vertices.iter().all(|p| p.is_finite()) || !self.velocity.is_finite() {
            return Err(Error::InvalidArgument("obstacle coordinates must be finite".into()));
        }
        Ok(())
    }

    /// Edges `(v_i, v_{i+1})`, closing back to the first vertex.
    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Lower-left and upper-right corners of the bounding box.
    pub fn extent(&self) -> (Point2, Point2) {
        self.vertices.iter().fold(
            (
                Point2::new(f64::INFINITY, f64::INFINITY),
                Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
            ),
            |(lo, hi), p| {
                (
                    Point2::new(lo.x.min(p.x), lo.y.min(p.y)),
                    Point2::new(hi.x.max(p.x), hi.y.max(p.y)),
                )
            },
        )
    }

    /// True when `p` lies strictly inside the polygon (boundary excluded).
    pub fn strictly_contains(&self, p: Point2) -> bool {
        if self.edges().any(|(a, b)| segments_intersect(p, p, a, b)) {
            return false;
        }
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let cross_x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < cross_x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    pub fn translate(&mut self, dx: f64, dy: f64) {
        for v in &mut self.vertices {
            *v = v.offset(dx, dy);
        }
    }
}

/// Map of `width × height` cm with a moving start and target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolygonWorld {
    pub width: f64,
    pub height: f64,
    pub start: Point2,
    pub start_velocity: Point2,
    pub target: Point2,
    pub target_velocity: Point2,
    pub obstacles: Vec<Obstacle>,
}

impl PolygonWorld {
    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0 && self.height > 0.0 && self.width.is_finite() && self.height.is_finite()) {
            return Err(Error::InvalidBounds("map size must be positive and finite".into()));
        }
        for (what, p) in [("start", self.start), ("target", self.target)] {
            if !self.inside(p) {
                return Err(Error::InvalidArgument(format!(
                    "{what} ({}, {}) lies outside the map",
                    p.x, p.y
                )));
            }
        }
        if !self.start_velocity.is_finite() || !self.target_velocity.is_finite() {
            return Err(Error::InvalidArgument(
                "start and target velocities must be finite".into(),
            ));
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            o.validate()?;
            if !o.vertices.iter().all(|p| self.inside(*p)) {
                return Err(Error::InvalidArgument(format!("obstacle {i} leaves the map")));
            }
        }
        Ok(())
    }

    pub fn inside(&self, p: Point2) -> bool {
        p.is_finite() && (0.0..=self.width).contains(&p.x) && (0.0..=self.height).contains(&p.y)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("world serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let world: Self =
            serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("malformed world: {e}")))?;
        world.validate()?;
        Ok(world)
    }
}

/// Waypoints in visit order; start and target belong to the world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub waypoints: Vec<Point2>,
}

impl Path {
    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }
}

pub fn decode_path(particle: &[f64]) -> Result<Path> {
    if !particle.len().is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "path particle needs an even dimension, got {}",
            particle.len()
        )));
    }
    let (xs, ys) = particle.split_at(particle.len() / 2);
    Ok(Path {
        waypoints: xs.iter().zip(ys).map(|(x, y)| Point2::new(*x, *y)).collect(),
    })
}

pub fn encode_path(path: &Path) -> Vec<f64> {
    path.waypoints
        .iter()
        .map(|p| p.x)
        .chain(path.waypoints.iter().map(|p| p.y))
        .collect()
}

fn orientation(a: Point2, b: Point2, c: Point2) -> i8 {
    let cross = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    if cross > ORIENTATION_EPS {
        1
    } else if cross < -ORIENTATION_EPS {
        -1
    } else {
        0
    }
}

/// `p` within the bounding box of `a`-`b`; meaningful when the three are collinear.
fn within_box(a: Point2, b: Point2, p: Point2) -> bool {
    a.x.min(b.x) <= p.x && p.x <= a.x.max(b.x) && a.y.min(b.y) <= p.y && p.y <= a.y.max(b.y)
}

/// True iff the closed segments `a1-a2` and `b1-b2` share a point.
pub fn segments_intersect(a1: Point2, a2: Point2, b1: Point2, b2: Point2) -> bool {
    let o1 = orientation(a1, a2, b1);
    let o2 = orientation(a1, a2, b2);
    let o3 = orientation(b1, b2, a1);
    let o4 = orientation(b1, b2, a2);
    if o1 * o2 < 0 && o3 * o4 < 0 {
        return true;
    }
    (o1 == 0 && within_box(a1, a2, b1))
        || (o2 == 0 && within_box(a1, a2, b2))
        || (o3 == 0 && within_box(b1, b2, a1))
        || (o4 == 0 && within_box(b1, b2, a2))
}

// Bounding boxes are widened by this much so the prefilter never rejects a
// pair that the collinear band would accept.
const BOX_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone)]
struct PreparedObstacle {
    lo: Point2,
    hi: Point2,
    obstacle: Obstacle,
}

impl PreparedObstacle {
    fn new(obstacle: &Obstacle) -> Self {
        let (lo, hi) = obstacle.extent();
        Self {
            lo: lo.offset(-BOX_MARGIN, -BOX_MARGIN),
            hi: hi.offset(BOX_MARGIN, BOX_MARGIN),
            obstacle: obstacle.clone(),
        }
    }

    fn may_touch(&self, a: Point2, b: Point2) -> bool {
        a.x.max(b.x) >= self.lo.x && a.x.min(b.x) <= self.hi.x && a.y.max(b.y) >= self.lo.y && a.y.min(b.y) <= self.hi.y
    }

    fn crossings(&self, a: Point2, b: Point2) -> usize {
        if !self.may_touch(a, b) {
            return 0;
        }
        self.obstacle
            .edges()
            .filter(|(e1, e2)| segments_intersect(a, b, *e1, *e2))
            .count()
    }

    fn strictly_contains(&self, p: Point2) -> bool {
        self.may_touch(p, p) && self.obstacle.strictly_contains(p)
    }
}

fn prepare(world: &PolygonWorld) -> Vec<PreparedObstacle> {
    world.obstacles.iter().map(PreparedObstacle::new).collect()
}

/// Counts collisions along `start, p(0), .., p(n-1), target`.
fn count_along<F: Fn(usize) -> Point2>(
    start: Point2,
    target: Point2,
    n: usize,
    at: F,
    obstacles: &[PreparedObstacle],
) -> usize {
    let point = |i: usize| match i {
        0 => start,
        i if i == n + 1 => target,
        i => at(i - 1),
    };
    let mut q = 0;
    for i in 0..=n {
        let (a, b) = (point(i), point(i + 1));
        q += obstacles.iter().map(|o| o.crossings(a, b)).sum::<usize>();
    }
    if n > 0 {
        let first = at(0);
        q += obstacles.iter().filter(|o| o.strictly_contains(first)).count();
    }
    q
}

fn length_along<F: Fn(usize) -> Point2>(start: Point2, target: Point2, n: usize, at: F) -> f64 {
    let mut total = 0.0;
    let mut prev = start;
    for i in 0..n {
        let p = at(i);
        total += prev.distance(p);
        prev = p;
    }
    total + prev.distance(target)
}

/// Number of intersecting (path segment, obstacle edge) pairs, plus one per
/// obstacle that strictly contains the first waypoint.
pub fn count_intersections(path: &Path, world: &PolygonWorld) -> usize {
    let obstacles = prepare(world);
    count_along(world.start, world.target, path.len(), |i| path.waypoints[i], &obstacles)
}

/// Euclidean length of start → waypoints → target.
pub fn path_length(path: &Path, world: &PolygonWorld) -> Result<f64> {
    if path.is_empty() {
        return Err(Error::InvalidArgument("path has no waypoints".into()));
    }
    Ok(length_along(world.start, world.target, path.len(), |i| {
        path.waypoints[i]
    }))
}

/// `alpha · Q^beta`
pub fn penalty(collisions: usize, alpha: f64, beta: f64) -> f64 {
    if collisions == 0 {
        0.0
    } else {
        alpha * (collisions as f64).powf(beta)
    }
}

fn check_penalty(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha >= 0.0 && alpha.is_finite() && beta >= 1.0 && beta.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "penalty needs alpha >= 0 and beta >= 1, got alpha={alpha}, beta={beta}"
        )));
    }
    Ok(())
}

/// Path length plus collision penalty for one particle.
pub fn path_fitness(particle: &[f64], world: &PolygonWorld, alpha: f64, beta: f64) -> Result<f64> {
    check_penalty(alpha, beta)?;
    let path = decode_path(particle)?;
    Ok(path_length(&path, world)? + penalty(count_intersections(&path, world), alpha, beta))
}

/// The path fitness of a frozen world as an optimization problem.
#[derive(Debug, Clone)]
pub struct PathProblem {
    world: PolygonWorld,
    obstacles: Vec<PreparedObstacle>,
    bounds: SearchBounds,
    waypoints: usize,
    alpha: f64,
    beta: f64,
}

impl PathProblem {
    pub fn new(world: &PolygonWorld, waypoints: usize, alpha: f64, beta: f64) -> Result<Self> {
        world.validate()?;
        check_penalty(alpha, beta)?;
        if waypoints == 0 {
            return Err(Error::InvalidArgument("path needs at least one waypoint".into()));
        }
        let lo = vec![0.0; 2 * waypoints];
        let hi = std::iter::repeat_n(world.width, waypoints)
            .chain(std::iter::repeat_n(world.height, waypoints))
            .collect();
        Ok(Self {
            world: world.clone(),
            obstacles: prepare(world),
            bounds: SearchBounds::new(lo, hi)?,
            waypoints,
            alpha,
            beta,
        })
    }

    pub fn world(&self) -> &PolygonWorld {
        &self.world
    }

    pub fn waypoints(&self) -> usize {
        self.waypoints
    }

    /// Collision count `Q` of one particle.
    pub fn collisions(&self, particle: &[f64]) -> usize {
        let (xs, ys) = particle.split_at(self.waypoints);
        count_along(
            self.world.start,
            self.world.target,
            self.waypoints,
            |i| Point2::new(xs[i], ys[i]),
            &self.obstacles,
        )
    }

    pub fn length(&self, particle: &[f64]) -> f64 {
        let (xs, ys) = particle.split_at(self.waypoints);
        length_along(self.world.start, self.world.target, self.waypoints, |i| {
            Point2::new(xs[i], ys[i])
        })
    }
}

impl FitnessProblem for PathProblem {
    fn name(&self) -> &str {
        "path"
    }

    fn bounds(&self) -> &SearchBounds {
        &self.bounds
    }

    fn evaluate(&self, particle: &[f64]) -> f64 {
        self.length(particle) + penalty(self.collisions(particle), self.alpha, self.beta)
    }
}
