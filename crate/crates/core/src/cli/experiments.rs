use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::causality::{
    is_causal_unitary, nearest_product_unitary, operator_schmidt_values, perturbation_probe,
    semicausal_defect, sorkin_violation, Direction, ProbeRow, SignallingReport, SorkinScenario,
};
use crate::channels::{ChannelJson, KrausChannel, ZooChannel};
use crate::error::{Error, Result};
use crate::lattice::{build_scenario, FieldAlgebra, Region, SorkinTriple};
use crate::sampling::{
    haar_global_unitary, measure_zero_experiment, random_channel, random_density, random_hermitian,
    MeasureZeroStats, RngStream, SampleRecord, SamplerArm,
};
use crate::tensor::{Bipartition, Operator, SystemDims, DEFAULT_TOL};

use super::config::{
    CheckCausalConfig, LatticeSorkinConfig, NearestProductConfig, PerturbBallConfig,
    SampleHaarConfig,
};
use super::report::Assertion;

/// What an experiment hands back to the runner.
pub struct Outcome<R, Row = ()> {
    pub results: R,
    pub assertions: Vec<Assertion>,
    pub rows: Vec<Row>,
}

/// Every causality decision for one channel.
#[derive(Clone, Debug, Serialize)]
pub struct CausalCheck {
    pub dims: Vec<usize>,
    pub tol: f64,
    pub unitary: bool,
    /// Operator-Schmidt verdict; only for unitary channels.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub causal_unitary: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_second_schmidt: Option<f64>,
    pub signalling: Vec<SignallingReport>,
    pub max_defect: f64,
    pub causal_by_defect: bool,
    pub max_sorkin_violation: f64,
    pub causal_by_sorkin: bool,
    /// A unitary that signals one way but not back across some split.
    pub one_way_unitary: bool,
}

impl CausalCheck {
    pub fn deciders_agree(&self) -> bool {
        self.causal_by_defect == self.causal_by_sorkin
            && self
                .causal_unitary
                .is_none_or(|v| v == self.causal_by_defect)
    }
}

/// Runs the Schmidt test (for unitaries), the semicausal defect in both
/// directions across every bipartition, and `n_scenarios` random Sorkin
/// scenarios per bipartition and direction.
pub fn check_channel(
    c: &KrausChannel,
    tol: f64,
    n_scenarios: u64,
    seed: u64,
) -> Result<CausalCheck> {
    let dims = c.dims().clone();
    let parts = Bipartition::all(&dims);
    let u = c.as_unitary(DEFAULT_TOL);
    let (causal_unitary, max_second_schmidt) = match &u {
        Some(u) => {
            let mut max = 0.0f64;
            for p in &parts {
                max = max.max(
                    operator_schmidt_values(u, p)?
                        .get(1)
                        .copied()
                        .unwrap_or(0.0),
                );
            }
            (Some(is_causal_unitary(u, &dims, tol)?), Some(max))
        }
        None => (None, None),
    };

    let mut signalling = Vec::new();
    let mut one_way = false;
    for p in &parts {
        let a = semicausal_defect(c, p, Direction::LeftToRight, tol)?;
        let b = semicausal_defect(c, p, Direction::RightToLeft, tol)?;
        one_way |= a.signals() != b.signals();
        signalling.push(a);
        signalling.push(b);
    }
    let max_defect = signalling.iter().map(|r| r.strength).fold(0.0, f64::max);

    let mut max_violation = 0.0f64;
    let mut stream = 0;
    for p in &parts {
        for part in [p.clone(), p.swapped()] {
            let sender = dims.select(part.left())?;
            let receiver = dims.select(part.right())?.total();
            for _ in 0..n_scenarios {
                let mut rng = RngStream::new(seed, stream).rng();
                stream += 1;
                let prep = random_channel(&sender, 2, &mut rng);
                let obs = Operator::single(random_hermitian(receiver, &mut rng))?;
                let rho = random_density(&dims, &mut rng);
                let s = SorkinScenario::from_local_parts(
                    rho,
                    &prep,
                    c.clone(),
                    &obs,
                    part.clone(),
                    1e-10,
                )?;
                max_violation = max_violation.max(sorkin_violation(&s)?.abs());
            }
        }
    }

    Ok(CausalCheck {
        dims: dims.as_slice().to_vec(),
        tol,
        unitary: u.is_some(),
        causal_unitary,
        max_second_schmidt,
        signalling,
        max_defect,
        causal_by_defect: max_defect <= tol,
        max_sorkin_violation: max_violation,
        causal_by_sorkin: max_violation <= tol,
        one_way_unitary: u.is_some() && one_way,
    })
}

fn dims_of(v: &[usize]) -> Result<SystemDims> {
    SystemDims::new(v.to_vec())
}

pub fn check_causal(cfg: &CheckCausalConfig) -> Result<Outcome<CausalCheck>> {
    let channel = match (&cfg.channel, &cfg.channel_file) {
        (Some(z), None) => {
            let dims = cfg
                .dims
                .as_deref()
                .ok_or_else(|| Error::invalid("`dims` is required with `channel`"))?;
            crate::channels::zoo(z, &dims_of(dims)?)?
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.display().to_string(),
                source,
            })?;
            let json: ChannelJson = serde_json::from_str(&text)
                .map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
            if cfg.dims.as_ref().is_some_and(|d| *d != json.dims) {
                return Err(Error::invalid("`dims` disagrees with the channel file"));
            }
            KrausChannel::from_json(&json, 1e-10)?
        }
        _ => {
            return Err(Error::invalid(
                "give exactly one of `channel` and `channel_file`",
            ))
        }
    };
    if cfg.n_scenarios == 0 {
        return Err(Error::param("n_scenarios must be at least 1"));
    }
    let check = check_channel(&channel, cfg.tol, cfg.n_scenarios, cfg.seed)?;
    let assertions = vec![
        Assertion::new(
            "deciders_agree",
            check.deciders_agree(),
            format!(
                "defect {:e}, sampled Sorkin {:e}, Schmidt {:?}",
                check.max_defect, check.max_sorkin_violation, check.max_second_schmidt
            ),
        ),
        Assertion::new(
            "no_one_way_unitary",
            !check.one_way_unitary,
            "a unitary that is semicausal one way is a product, so it cannot signal the other way",
        ),
    ];
    Ok(Outcome {
        results: check,
        assertions,
        rows: Vec::new(),
    })
}

pub fn sample_haar(cfg: &SampleHaarConfig) -> Result<Outcome<MeasureZeroStats, SampleRecord>> {
    let dims = dims_of(&cfg.dims)?;
    let mut stats = measure_zero_experiment(&dims, cfg.n_samples, cfg.tol, cfg.seed, cfg.arm)?;
    let rows = std::mem::take(&mut stats.records);
    let (name, passed, want) = match cfg.arm {
        SamplerArm::Global => ("no_product_hits", stats.count_product_within_tol == 0, 0),
        SamplerArm::Local => (
            "all_product",
            stats.count_product_within_tol == stats.n_samples,
            stats.n_samples,
        ),
    };
    let detail = format!(
        "{} of {} within {:e} (expected {want})",
        stats.count_product_within_tol, stats.n_samples, stats.tol
    );
    Ok(Outcome {
        results: stats,
        assertions: vec![Assertion::new(name, passed, detail)],
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NearestRow {
    pub sample_id: u64,
    pub overlap: f64,
    pub distance: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct NearestSummary {
    pub dims: Vec<usize>,
    pub left: Vec<usize>,
    pub n_samples: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unitary: Option<ZooChannel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schmidt_values: Option<Vec<f64>>,
    pub min_distance: f64,
    pub max_distance: f64,
    pub mean_distance: f64,
    pub max_overlap: f64,
    pub all_converged: bool,
}

pub fn nearest_product(cfg: &NearestProductConfig) -> Result<Outcome<NearestSummary, NearestRow>> {
    let dims = dims_of(&cfg.dims)?;
    let p = Bipartition::new(&dims, &cfg.left)?;
    let fixed = match &cfg.unitary {
        Some(z) => Some(
            crate::channels::zoo(z, &dims)?
                .as_unitary(DEFAULT_TOL)
                .ok_or_else(|| Error::invalid("`unitary` does not name a unitary channel"))?,
        ),
        None => None,
    };
    let n = if fixed.is_some() { 1 } else { cfg.n_samples };
    if n == 0 {
        return Err(Error::param("n_samples must be at least 1"));
    }
    let runs: Vec<(NearestRow, bool)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let u = match &fixed {
                Some(u) => u.clone(),
                None => haar_global_unitary(&dims, &mut RngStream::new(cfg.seed, i).rng()),
            };
            let r = nearest_product_unitary(&u, &p, &cfg.options)?;
            let monotone = r.history.windows(2).all(|w| w[1] >= w[0] - 1e-12);
            Ok((
                NearestRow {
                    sample_id: i,
                    overlap: r.overlap,
                    distance: r.distance,
                    iterations: r.iterations,
                    converged: r.converged,
                },
                monotone,
            ))
        })
        .collect::<Result<_>>()?;
    let schmidt_values = match &fixed {
        Some(u) => Some(operator_schmidt_values(u, &p)?),
        None => None,
    };
    let rows: Vec<NearestRow> = runs.iter().map(|(r, _)| r.clone()).collect();
    let d = dims.total() as f64;
    let dist = rows.iter().map(|r| r.distance);
    let summary = NearestSummary {
        dims: cfg.dims.clone(),
        left: p.left().to_vec(),
        n_samples: n,
        unitary: cfg.unitary.clone(),
        schmidt_values,
        min_distance: dist.clone().fold(f64::INFINITY, f64::min),
        max_distance: dist.clone().fold(0.0, f64::max),
        mean_distance: dist.sum::<f64>() / n as f64,
        max_overlap: rows.iter().map(|r| r.overlap).fold(0.0, f64::max),
        all_converged: rows.iter().all(|r| r.converged),
    };
    let assertions = vec![
        Assertion::new(
            "overlap_bounded",
            summary.max_overlap <= d + 1e-9,
            format!("max overlap {} against dimension {d}", summary.max_overlap),
        ),
        Assertion::new(
            "overlap_monotone",
            runs.iter().all(|(_, m)| *m),
            "overlap never decreases across sweeps",
        ),
    ];
    Ok(Outcome {
        results: summary,
        assertions,
        rows,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PerturbSummary {
    pub causal_defect: f64,
    pub acausal_defect: f64,
    pub defect_slopes: Vec<f64>,
    pub choi_slopes: Vec<f64>,
    pub defect_slope_spread: f64,
    pub choi_slope_spread: f64,
}

/// `(max − min)/|mean|`.
fn relative_spread(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    (max - min) / mean.abs()
}

pub fn perturb_ball(cfg: &PerturbBallConfig) -> Result<Outcome<PerturbSummary, ProbeRow>> {
    let dims = dims_of(&cfg.dims)?;
    let p = Bipartition::new(&dims, &cfg.left)?;
    if cfg.epsilons.is_empty() || cfg.epsilons.iter().any(|e| !(*e > 0.0 && *e <= 1.0)) {
        return Err(Error::param("epsilons must be non-empty and lie in (0, 1]"));
    }
    let causal = crate::channels::zoo(&cfg.causal, &dims)?;
    let acausal = crate::channels::zoo(&cfg.acausal, &dims)?;
    let rows = perturbation_probe(&causal, &acausal, &p, cfg.direction, &cfg.epsilons, cfg.tol)?;
    let defect_slopes: Vec<f64> = rows.iter().map(|r| r.defect / r.epsilon).collect();
    let choi_slopes: Vec<f64> = rows.iter().map(|r| r.choi_distance / r.epsilon).collect();
    let summary = PerturbSummary {
        causal_defect: semicausal_defect(&causal, &p, cfg.direction, cfg.tol)?.strength,
        acausal_defect: semicausal_defect(&acausal, &p, cfg.direction, cfg.tol)?.strength,
        defect_slope_spread: relative_spread(&defect_slopes),
        choi_slope_spread: relative_spread(&choi_slopes),
        defect_slopes,
        choi_slopes,
    };
    let assertions = vec![
        Assertion::new(
            "acausal_in_every_ball",
            rows.iter().all(|r| r.defect > cfg.tol),
            "every mixture signals",
        ),
        Assertion::new(
            "defect_linear",
            summary.defect_slope_spread <= cfg.rel_tol,
            format!("relative spread {:e}", summary.defect_slope_spread),
        ),
        Assertion::new(
            "choi_distance_linear",
            summary.choi_slope_spread <= cfg.rel_tol,
            format!("relative spread {:e}", summary.choi_slope_spread),
        ),
    ];
    Ok(Outcome {
        results: summary,
        assertions,
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaRow {
    pub lambda: f64,
    pub scalar: f64,
    pub coeff_f: f64,
    pub coeff_g: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LatticeSummary {
    pub delta_fg: f64,
    pub delta_fh: f64,
    pub derivative: f64,
    pub expected_derivative: f64,
    /// Largest deviation from the three-term form over the λ grid.
    pub max_identity_error: f64,
    pub identity_holds: bool,
    pub signals: bool,
    pub triple: SorkinTriple,
}

pub fn lattice_sorkin(cfg: &LatticeSorkinConfig) -> Result<Outcome<LatticeSummary, LambdaRow>> {
    cfg.lattice.validate()?;
    let region = Region::new(cfg.region.iter().copied());
    let triple = build_scenario(&cfg.lattice, &region, &cfg.scenario)?;
    let mut alg = FieldAlgebra::new(cfg.lattice.clone())?;
    let f = alg.register(triple.f.clone())?;
    let g = alg.register(triple.g.clone())?;
    let h = alg.register(triple.h.clone())?;
    let dfg = alg.delta(f, g)?;
    let dfh = alg.delta(f, h)?;
    let derivative = alg.signalling_derivative(f, g, h)?;
    let expected = -2.0 * dfg * dfh;

    let mut err = (derivative - expected).abs();
    let mut structure = true;
    let mut rows = Vec::with_capacity(cfg.lambdas.len());
    for &lambda in &cfg.lambdas {
        let a = alg.sorkin_chain(f, g, h, lambda)?;
        structure &= a.linear.keys().all(|&k| k == f || k == g);
        err = err
            .max((a.coeff(g) - 1.0).abs())
            .max((a.coeff(f) + 2.0 * dfg).abs())
            .max((a.scalar + 2.0 * lambda * dfg * dfh).abs());
        rows.push(LambdaRow {
            lambda,
            scalar: a.scalar,
            coeff_f: a.coeff(f),
            coeff_g: a.coeff(g),
        });
    }
    let holds = structure && err <= cfg.tol;
    let summary = LatticeSummary {
        delta_fg: dfg,
        delta_fh: dfh,
        derivative,
        expected_derivative: expected,
        max_identity_error: err,
        identity_holds: holds,
        signals: derivative != 0.0,
        triple,
    };
    let assertions = vec![Assertion::new(
        "identity_holds",
        holds,
        format!(
            "max coefficient error {err:e} against tolerance {:e}",
            cfg.tol
        ),
    )];
    Ok(Outcome {
        results: summary,
        assertions,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::causality::NearestOptions;
    use crate::lattice::{LatticeSpec, Point, ScenarioOptions};

    fn q2() -> SystemDims {
        SystemDims::new(vec![2, 2]).unwrap()
    }

    #[test]
    fn check_channel_on_fixtures() {
        let cnot = crate::channels::zoo(&ZooChannel::Cnot, &q2()).unwrap();
        let c = check_channel(&cnot, 1e-8, 5, 1).unwrap();
        assert_eq!(c.causal_unitary, Some(false));
        assert!(!c.causal_by_defect && !c.causal_by_sorkin && c.deciders_agree());
        assert!(!c.one_way_unitary);

        let c1w = crate::channels::zoo(&ZooChannel::ClassicalOneWay, &q2()).unwrap();
        let c = check_channel(&c1w, 1e-8, 5, 1).unwrap();
        assert!(!c.unitary && c.causal_unitary.is_none());
        assert!(c.deciders_agree() && !c.causal_by_defect);

        let local =
            crate::channels::zoo(&ZooChannel::LocalRandom { seed: 3, stream: 0 }, &q2()).unwrap();
        let c = check_channel(&local, 1e-8, 5, 1).unwrap();
        assert!(c.causal_by_defect && c.causal_by_sorkin && c.causal_unitary == Some(true));
    }

    #[test]
    fn nearest_product_on_swap() {
        let cfg = NearestProductConfig {
            experiment: None,
            seed: 0,
            dims: vec![2, 2],
            left: vec![0],
            n_samples: 5,
            unitary: Some(ZooChannel::Swap),
            options: NearestOptions::default(),
            report: None,
            csv: None,
        };
        let out = nearest_product(&cfg).unwrap();
        assert_eq!(out.rows.len(), 1);
        assert!((out.results.max_overlap - 2.0).abs() < 1e-6);
        assert!(out.assertions.iter().all(|a| a.passed));
    }

    #[test]
    fn lattice_identity_on_segment() {
        let cfg = LatticeSorkinConfig {
            experiment: None,
            seed: 0,
            lattice: LatticeSpec::new(64, 32).unwrap(),
            region: Region::segment(16, 26, 34).points().collect(),
            scenario: ScenarioOptions::default(),
            lambdas: vec![0.0, 1.0, -0.5],
            tol: 1e-12,
            report: None,
            csv: None,
        };
        let out = lattice_sorkin(&cfg).unwrap();
        assert!(out.results.identity_holds && out.results.signals);
        assert_eq!(out.rows[0].scalar, 0.0);
        assert_eq!(out.rows[1].coeff_g, 1.0);

        let point = LatticeSorkinConfig {
            region: vec![Point::new(16, 30)],
            ..cfg
        };
        let out = lattice_sorkin(&point).unwrap();
        assert!(out.results.identity_holds && !out.results.signals);
    }

    #[test]
    fn relative_spread_basics() {
        assert_eq!(relative_spread(&[2.0, 2.0]), 0.0);
        assert!((relative_spread(&[1.0, 3.0]) - 1.0).abs() < 1e-15);
    }
}
