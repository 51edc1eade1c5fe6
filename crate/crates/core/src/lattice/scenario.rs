use serde::{Deserialize, Serialize};

use super::{spacelike_separated, LatticeSpec, Point, Region, TestFunction};
use crate::error::{Error, Result};

/// Placement of the preparation (`h`) and measurement (`g`) bumps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioOptions {
    /// Time steps between `K` and each of `h` (before) and `g` (after).
    pub lead: usize,
    /// `h` and `g` span `2·radius + 1` sites.
    pub radius: usize,
}

impl Default for ScenarioOptions {
    fn default() -> Self {
        Self { lead: 2, radius: 2 }
    }
}

/// `f` on `K`, `h` in `K_in`, `g` in `K_out`, with `h` and `g` spacelike.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SorkinTriple {
    pub f: TestFunction,
    pub g: TestFunction,
    pub h: TestFunction,
}

/// Positive `cos²` weight for offset `j` from the centre of a bump of
/// half-width `half` (strictly inside, so never zero).
fn bump_weight(j: f64, half: f64) -> f64 {
    (std::f64::consts::FRAC_PI_2 * j / (half + 1.0))
        .cos()
        .powi(2)
}

fn segment_bump(t: usize, right_edge: i64, len: usize, n: usize) -> Result<TestFunction> {
    let half = (len - 1) as f64 / 2.0;
    TestFunction::new((0..len).map(|k| {
        let x = (right_edge - k as i64).rem_euclid(n as i64) as usize;
        (Point::new(t, x), bump_weight(k as f64 - half, half))
    }))
}

/// Builds the test functions of a Sorkin scenario around the region `K`.
///
/// `K_in` is everything outside the causal future of `K`, `K_out`
/// everything outside its causal past. `h` sits `lead` steps before `K`
/// with its right edge at `K`'s left edge, `g` sits `lead` steps after `K`
/// with its left edge at `K`'s right edge, and both are pushed outward by
/// the least amount that makes them spacelike. `f` is a positive bump over
/// all of `K`.
///
/// When `K` is narrow compared with its time extent plus `2·lead`, the push
/// takes `h` and `g` outside the light cones of `K`; the triple is still
/// valid but `Δ(f, h)` or `Δ(f, g)` then vanishes.
pub fn build_scenario(
    spec: &LatticeSpec,
    k: &Region,
    opts: &ScenarioOptions,
) -> Result<SorkinTriple> {
    spec.validate()?;
    if k.is_empty() {
        return Err(Error::Geometry("region K is empty".into()));
    }
    if opts.lead == 0 {
        return Err(Error::param("lead must be at least 1"));
    }
    k.check_within(spec, "K")?;
    let t_min = k.points().map(|p| p.t).min().unwrap_or(0);
    let t_max = k.points().map(|p| p.t).max().unwrap_or(0);
    let x_left = k.points().map(|p| p.x).min().unwrap_or(0) as i64;
    let x_right = k.points().map(|p| p.x).max().unwrap_or(0) as i64;

    let Some(t_h) = t_min.checked_sub(opts.lead) else {
        return Err(Error::Geometry(format!(
            "K_in is empty in the window: h needs {} steps before t={t_min}",
            opts.lead
        )));
    };
    let t_g = t_max + opts.lead;
    if t_g >= spec.n_steps {
        return Err(Error::Geometry(format!(
            "K_out is empty in the window: g needs t={t_g} but the window ends at t={}",
            spec.n_steps - 1
        )));
    }
    let span = t_g - t_h;
    let len = 2 * opts.radius + 1;
    if 2 * span >= spec.n_sites {
        return Err(Error::Geometry(format!(
            "light cones wrap around the ring: time span {span} needs more than {} sites",
            2 * span
        )));
    }

    // h's right edge and g's left edge must be more than `span` apart
    let gap = x_right - x_left;
    let push = (span as i64 + 1 - gap).max(0);
    let h_edge = x_left - push / 2;
    let g_edge = x_right + (push - push / 2);
    let g_right = g_edge + len as i64 - 1;
    let width = g_right - (h_edge - len as i64 + 1) + 1;
    if width + span as i64 >= spec.n_sites as i64 {
        return Err(Error::Geometry(format!(
            "ring of {} sites too small: h and g would meet the other way round",
            spec.n_sites
        )));
    }

    let n = spec.n_sites;
    let h = segment_bump(t_h, h_edge, len, n)?;
    let g = segment_bump(t_g, g_right, len, n)?;
    let half = (gap as f64) / 2.0;
    let mid = (x_left + x_right) as f64 / 2.0;
    let f = TestFunction::new(k.points().map(|p| (p, bump_weight(p.x as f64 - mid, half))))?;

    let (sh, sg) = (h.support(), g.support());
    if !spacelike_separated(spec, &sh, &sg) {
        return Err(Error::Geometry(
            "h and g are not spacelike separated".into(),
        ));
    }
    if sh
        .points()
        .any(|q| k.points().any(|p| spec.in_future_of(q, p)))
    {
        return Err(Error::Geometry("h is not contained in K_in".into()));
    }
    if sg
        .points()
        .any(|q| k.points().any(|p| spec.in_future_of(p, q)))
    {
        return Err(Error::Geometry("g is not contained in K_out".into()));
    }
    Ok(SorkinTriple { f, g, h })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{pauli_jordan, FieldAlgebra};

    #[test]
    fn point_region_gives_valid_triple() {
        let spec = LatticeSpec::new(64, 32).unwrap();
        let k = Region::new([Point::new(16, 32)]);
        let s = build_scenario(&spec, &k, &ScenarioOptions::default()).unwrap();
        assert!(spacelike_separated(&spec, &s.h.support(), &s.g.support()));
        assert_eq!(s.f.support(), k);
        // a point cannot reach two spacelike regions at once
        let dfh = pauli_jordan(&spec, &s.f, &s.h).unwrap();
        let dfg = pauli_jordan(&spec, &s.f, &s.g).unwrap();
        assert_eq!(dfh * dfg, 0.0);
    }

    #[test]
    fn segment_region_signals() {
        let spec = LatticeSpec::new(64, 32).unwrap();
        let k = Region::segment(16, 26, 34);
        let s = build_scenario(&spec, &k, &ScenarioOptions::default()).unwrap();
        assert!(s.f.iter().all(|(_, c)| c > 0.0));
        assert!(s.h.iter().all(|(p, c)| c > 0.0 && p.t == 14));
        assert!(s.g.iter().all(|(p, c)| c > 0.0 && p.t == 18));
        let mut alg = FieldAlgebra::new(spec).unwrap();
        let f = alg.register(s.f).unwrap();
        let g = alg.register(s.g).unwrap();
        let h = alg.register(s.h).unwrap();
        assert!(alg.delta(f, g).unwrap().abs() > 1e-3);
        assert!(alg.delta(f, h).unwrap().abs() > 1e-3);
        assert!(alg.signalling_derivative(f, g, h).unwrap() != 0.0);
    }

    #[test]
    fn bumps_wrap_around_the_seam() {
        let spec = LatticeSpec::new(32, 16).unwrap();
        let k = Region::segment(8, 0, 5);
        let s = build_scenario(&spec, &k, &ScenarioOptions::default()).unwrap();
        assert!(s.h.support().points().any(|p| p.x > 25));
        assert!(spacelike_separated(&spec, &s.h.support(), &s.g.support()));
    }

    #[test]
    fn infeasible_windows() {
        let opts = ScenarioOptions::default();
        let spec = LatticeSpec::new(64, 18).unwrap();
        let err = build_scenario(&spec, &Region::segment(16, 20, 30), &opts).unwrap_err();
        assert!(err.to_string().contains("K_out"), "{err}");
        let err = build_scenario(&spec, &Region::segment(1, 20, 30), &opts).unwrap_err();
        assert!(err.to_string().contains("K_in"), "{err}");
        let spec = LatticeSpec::new(8, 32).unwrap();
        let err = build_scenario(&spec, &Region::segment(10, 2, 3), &opts).unwrap_err();
        assert!(matches!(err, Error::Geometry(_)));
        let spec = LatticeSpec::new(64, 32).unwrap();
        assert!(build_scenario(&spec, &Region::default(), &opts).is_err());
        assert!(build_scenario(&spec, &Region::new([Point::new(40, 0)]), &opts).is_err());
    }

    #[test]
    fn triples_are_always_separated() {
        let spec = LatticeSpec::new(96, 48).unwrap();
        for t in [5, 20, 40] {
            for (x0, w) in [(0, 0), (10, 3), (50, 12), (90, 5)] {
                for lead in [1, 3] {
                    let k = Region::new((0..=w).map(|j| Point::new(t, (x0 + j) % 96)));
                    let opts = ScenarioOptions { lead, radius: 2 };
                    if let Ok(s) = build_scenario(&spec, &k, &opts) {
                        assert!(spacelike_separated(&spec, &s.h.support(), &s.g.support()));
                    }
                }
            }
        }
    }
}
