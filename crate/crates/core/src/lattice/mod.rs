//! A free real scalar field on a periodic 1+1D lattice.
//!
//! Space is a ring of `n_sites` points with spacing 1, time runs over
//! `0..n_steps` in steps of `dt`. The discrete Klein–Gordon update only
//! couples nearest neighbours, so signals travel exactly one site per step
//! and the lattice light cone is sharp: two points are spacelike when their
//! (wrapped) spatial distance exceeds their time difference.
//!
//! Field operators are tracked symbolically as [`AffineField`]s
//! `c₀·1 + Σ cᵢ φ(fᵢ)`, with the commutator convention
//! `[φ(f), φ(g)] = iΔ(f, g)`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

mod affine;
mod green;
mod scenario;

pub use affine::{AffineField, FieldAlgebra, FieldId};
pub use green::{green_columns, pauli_jordan, retarded_field, retarded_green, FieldHistory};
pub use scenario::{build_scenario, ScenarioOptions, SorkinTriple};

pub const MIN_SITES: usize = 8;

/// Lattice geometry and field parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub n_sites: usize,
    pub n_steps: usize,
    #[serde(default = "default_mass")]
    pub mass: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
}

fn default_mass() -> f64 {
    1.0
}

fn default_dt() -> f64 {
    1.0
}

impl LatticeSpec {
    /// Unit mass and unit time step.
    pub fn new(n_sites: usize, n_steps: usize) -> Result<Self> {
        Self::with_params(n_sites, n_steps, default_mass(), default_dt())
    }

    /// `dt ≤ 1` keeps the scheme stable for every mass; `mass = 0` is allowed.
    pub fn with_params(n_sites: usize, n_steps: usize, mass: f64, dt: f64) -> Result<Self> {
        let s = Self {
            n_sites,
            n_steps,
            mass,
            dt,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites < MIN_SITES {
            return Err(Error::param(format!(
                "n_sites must be at least {MIN_SITES}, got {}",
                self.n_sites
            )));
        }
        if self.n_steps < 2 {
            return Err(Error::param("n_steps must be at least 2"));
        }
        if !(self.mass.is_finite() && self.mass >= 0.0) {
            return Err(Error::param(format!(
                "mass must be finite and >= 0, got {}",
                self.mass
            )));
        }
        if !(self.dt > 0.0 && self.dt <= 1.0) {
            return Err(Error::param(format!(
                "dt must lie in (0, 1], got {}",
                self.dt
            )));
        }
        Ok(())
    }

    pub fn contains(&self, p: Point) -> bool {
        p.t < self.n_steps && p.x < self.n_sites
    }

    pub(crate) fn check_point(&self, p: Point, what: &str) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::Geometry(format!(
                "{what} point (t={}, x={}) lies outside the {}x{} window",
                p.t, p.x, self.n_steps, self.n_sites
            )))
        }
    }

    /// Shortest distance between two sites going either way round the ring.
    pub fn ring_distance(&self, a: usize, b: usize) -> usize {
        let d = a.abs_diff(b) % self.n_sites;
        d.min(self.n_sites - d)
    }

    /// No stencil path connects `p` and `q` in either time direction.
    pub fn spacelike(&self, p: Point, q: Point) -> bool {
        self.ring_distance(p.x, q.x) > p.t.abs_diff(q.t)
    }

    /// `q` lies in the causal future of `p` (including `p` itself).
    pub fn in_future_of(&self, q: Point, p: Point) -> bool {
        q.t >= p.t && self.ring_distance(p.x, q.x) <= q.t - p.t
    }
}

/// A lattice spacetime point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Point {
    pub t: usize,
    pub x: usize,
}

impl Point {
    pub fn new(t: usize, x: usize) -> Self {
        Self { t, x }
    }
}

/// A finite set of lattice points.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Region(BTreeSet<Point>);

impl Region {
    pub fn new(points: impl IntoIterator<Item = Point>) -> Self {
        Self(points.into_iter().collect())
    }

    /// Points `(t, x)` for `x` in `x0..=x1`.
    pub fn segment(t: usize, x0: usize, x1: usize) -> Self {
        Self::new((x0..=x1).map(|x| Point::new(t, x)))
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        self.0.iter().copied()
    }

    pub fn contains(&self, p: Point) -> bool {
        self.0.contains(&p)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn check_within(&self, spec: &LatticeSpec, what: &str) -> Result<()> {
        self.points().try_for_each(|p| spec.check_point(p, what))
    }
}

/// Every pair of points drawn from the two regions is spacelike.
pub fn spacelike_separated(spec: &LatticeSpec, a: &Region, b: &Region) -> bool {
    a.points().all(|p| b.points().all(|q| spec.spacelike(p, q)))
}

/// A real function on lattice points with finite support.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(Point, f64)>", into = "Vec<(Point, f64)>")]
pub struct TestFunction(BTreeMap<Point, f64>);

impl TestFunction {
    /// Repeated points have their coefficients summed; exact zeros are dropped.
    pub fn new(entries: impl IntoIterator<Item = (Point, f64)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (p, c) in entries {
            if !c.is_finite() {
                return Err(Error::param(format!(
                    "non-finite coefficient at (t={}, x={})",
                    p.t, p.x
                )));
            }
            *map.entry(p).or_insert(0.0) += c;
        }
        map.retain(|_, c| *c != 0.0);
        Ok(Self(map))
    }

    pub fn delta(p: Point) -> Self {
        Self(BTreeMap::from([(p, 1.0)]))
    }

    pub fn get(&self, p: Point) -> f64 {
        self.0.get(&p).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Point, f64)> + '_ {
        self.0.iter().map(|(p, c)| (*p, *c))
    }

    pub fn support(&self) -> Region {
        Region::new(self.0.keys().copied())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &TestFunction, b: f64) -> Result<Self> {
        Self::new(
            self.iter()
                .map(|(p, c)| (p, a * c))
                .chain(other.iter().map(|(p, c)| (p, b * c))),
        )
    }

    pub fn check_within(&self, spec: &LatticeSpec, what: &str) -> Result<()> {
        self.0.keys().try_for_each(|&p| spec.check_point(p, what))
    }

    pub(crate) fn min_time(&self) -> Option<usize> {
        self.0.keys().map(|p| p.t).min()
    }
}

impl TryFrom<Vec<(Point, f64)>> for TestFunction {
    type Error = Error;

    fn try_from(v: Vec<(Point, f64)>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<TestFunction> for Vec<(Point, f64)> {
    fn from(f: TestFunction) -> Self {
        f.0.into_iter().collect()
    }
}
