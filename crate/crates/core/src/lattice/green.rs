use rayon::prelude::*;

use super::{LatticeSpec, Point, TestFunction};
use crate::error::Result;

/// A real field on the whole `n_steps × n_sites` window, time-major.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldHistory {
    n_sites: usize,
    values: Vec<f64>,
}

impl FieldHistory {
    fn zeros(spec: &LatticeSpec) -> Self {
        Self {
            n_sites: spec.n_sites,
            values: vec![0.0; spec.n_sites * spec.n_steps],
        }
    }

    pub fn get(&self, p: Point) -> f64 {
        self.values[p.t * self.n_sites + p.x]
    }

    pub fn slice(&self, t: usize) -> &[f64] {
        &self.values[t * self.n_sites..(t + 1) * self.n_sites]
    }

    /// `Σ_p f(p)·F(p)`.
    pub fn pair(&self, f: &TestFunction) -> f64 {
        f.iter().map(|(p, c)| c * self.get(p)).sum()
    }
}

/// Retarded response to the source `s`, i.e. `F(p) = Σ_q G_R(p, q) s(q)`.
///
/// The update is leapfrog with the mass term averaged over the two outer
/// time levels,
///
/// `(1 + μ) F_{t+1} = 2F_t + dt² (F_{x+1} + F_{x−1} − 2F_t) − (1 + μ) F_{t−1}`,
/// `μ = m² dt² / 2`,
///
/// which is stable for `dt ≤ 1` at any mass. A source at `(t, x)` enters
/// as a jump `dt·s(t, x)` in `F_{t+1}(x)`, the discrete form of a unit kick
/// in the time derivative.
pub fn retarded_field(spec: &LatticeSpec, s: &TestFunction) -> Result<FieldHistory> {
    s.check_within(spec, "source")?;
    let mut out = FieldHistory::zeros(spec);
    let Some(t0) = s.min_time() else {
        return Ok(out);
    };
    let n = spec.n_sites;
    let dt2 = spec.dt * spec.dt;
    let damp = 1.0 + 0.5 * spec.mass * spec.mass * dt2;
    for t in t0..spec.n_steps - 1 {
        let (past, future) = out.values.split_at_mut((t + 1) * n);
        let cur = &past[t * n..];
        let next = &mut future[..n];
        for x in 0..n {
            let l = cur[(x + n - 1) % n];
            let r = cur[(x + 1) % n];
            let prev = if t > 0 { past[(t - 1) * n + x] } else { 0.0 };
            next[x] = (2.0 * cur[x] + dt2 * (l + r - 2.0 * cur[x])) / damp - prev;
        }
        for (p, c) in s.iter().filter(|(p, _)| p.t == t) {
            next[p.x] += spec.dt * c;
        }
    }
    Ok(out)
}

/// `G_R(·, src)`: zero up to and including `src.t`, `dt` at
/// `(src.t + 1, src.x)`, and zero outside the forward light cone of `src`.
pub fn retarded_green(spec: &LatticeSpec, src: Point) -> Result<FieldHistory> {
    spec.check_point(src, "source")?;
    retarded_field(spec, &TestFunction::delta(src))
}

/// Green-function columns for several sources, computed in parallel.
pub fn green_columns(spec: &LatticeSpec, srcs: &[Point]) -> Result<Vec<FieldHistory>> {
    srcs.par_iter().map(|&p| retarded_green(spec, p)).collect()
}

/// Smeared commutator function `Δ(f, g) = Σ f(p) (G_R − G_A)(p, q) g(q)`.
///
/// Evaluated as `⟨f, G_R g⟩ − ⟨g, G_R f⟩`, so swapping the arguments flips
/// the sign bit for bit, and spacelike supports give exactly `0.0`.
pub fn pauli_jordan(spec: &LatticeSpec, f: &TestFunction, g: &TestFunction) -> Result<f64> {
    f.check_within(spec, "f")?;
    g.check_within(spec, "g")?;
    let fg = retarded_field(spec, g)?.pair(f);
    let gf = retarded_field(spec, f)?.pair(g);
    Ok(fg - gf)
}
