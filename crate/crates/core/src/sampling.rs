//! Haar-random unitaries and the Monte Carlo evidence that product
//! unitaries form a null set.
//!
//! Randomness comes from ChaCha20 ([`rand_chacha::ChaCha20Rng`]) keyed by a
//! 64-bit seed with an explicit stream id; the generator is counter based
//! and its output is specified independently of the platform. Gaussian
//! variates use `rand_distr::StandardNormal` (ziggurat) on top of it.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::causality::{nearest_product_unitary, operator_schmidt_values, NearestOptions};
use crate::channels::KrausChannel;
use crate::error::{Error, Result};
use crate::tensor::{
    tensor_product, Bipartition, CMatrix, DensityOperator, Operator, SystemDims, C64,
};

/// A reproducible random stream: identical `(seed, stream)` pairs yield
/// identical sample sequences.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Complex Ginibre matrix with i.i.d. entries `(x + iy)/√2`, `x, y ~ N(0,1)`.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * h, im * h)
    })
}

/// Haar-distributed element of `U(n)`.
///
/// QR of a Ginibre matrix, with the columns of `Q` rephased by
/// `r_ii / |r_ii|` so the distribution does not depend on the QR
/// routine's sign conventions (Mezzadri's correction).
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    assert!(n >= 1, "haar_unitary needs n >= 1");
    let (q, r) = ginibre(n, n, rng).qr().unpack();
    let mut u = q;
    for k in 0..n {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..n {
            u[(i, k)] *= phase;
        }
    }
    u
}

/// `U_0 ⊗ U_1 ⊗ …` with independent Haar factors.
pub fn haar_local_unitary<R: Rng + ?Sized>(dims: &SystemDims, rng: &mut R) -> Operator {
    let mut factors = dims.as_slice().iter().map(|&d| {
        let f = haar_unitary(d, rng);
        Operator::single(f).expect("d >= 2")
    });
    let first = factors.next().expect("non-empty dims");
    factors.fold(first, |acc, f| tensor_product(&acc, &f))
}

/// Haar unitary on the whole composite space.
pub fn haar_global_unitary<R: Rng + ?Sized>(dims: &SystemDims, rng: &mut R) -> Operator {
    Operator::new(haar_unitary(dims.total(), rng), dims.clone()).expect("shape matches")
}

/// Random full-rank density operator `G G† / tr(G G†)` (Hilbert–Schmidt measure).
pub fn random_density<R: Rng + ?Sized>(dims: &SystemDims, rng: &mut R) -> DensityOperator {
    let g = ginibre(dims.total(), dims.total(), rng);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    let op = Operator::new(m.unscale(tr), dims.clone()).expect("shape matches");
    DensityOperator::new(op, 1e-9).expect("Wishart matrices are valid states")
}

/// Random Hermitian matrix `(G + G†)/2`.
pub fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let g = ginibre(d, d, rng);
    (&g + g.adjoint()).scale(0.5)
}

/// Random channel with `n_kraus` Kraus operators cut from a Haar isometry.
pub fn random_channel<R: Rng + ?Sized>(
    dims: &SystemDims,
    n_kraus: usize,
    rng: &mut R,
) -> KrausChannel {
    let d = dims.total();
    let n_kraus = n_kraus.max(1);
    let v = haar_unitary(d * n_kraus, rng);
    let kraus = (0..n_kraus)
        .map(|k| v.view((k * d, 0), (d, d)).into_owned())
        .collect();
    KrausChannel::new(kraus, dims.clone(), 1e-9).expect("isometry blocks are complete")
}

/// Which sampler feeds the measure-zero experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerArm {
    /// Haar on the full group `U(Πd_i)`.
    #[default]
    Global,
    /// Products of local Haar factors (control arm).
    Local,
}

/// Per-sample record, one CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample_id: u64,
    pub second_schmidt: f64,
    pub product_distance: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
}

/// Aggregate statistics of [`measure_zero_experiment`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureZeroStats {
    pub n_samples: u64,
    pub dims: SystemDims,
    pub tol: f64,
    pub arm: SamplerArm,
    pub count_product_within_tol: u64,
    pub min_second_schmidt: f64,
    pub max_second_schmidt: f64,
    pub min_product_distance: f64,
    pub histogram: Vec<HistogramBin>,
    #[serde(skip)]
    pub records: Vec<SampleRecord>,
}

/// Bin edges for the second-Schmidt-value histogram; the last bin is open.
pub const HISTOGRAM_EDGES: [f64; 11] = [
    0.0, 1e-12, 1e-9, 1e-6, 1e-3, 1e-2, 1e-1, 0.25, 0.5, 1.0, 2.0,
];

fn histogram(values: impl Iterator<Item = f64>) -> Vec<HistogramBin> {
    let mut bins: Vec<HistogramBin> = HISTOGRAM_EDGES
        .iter()
        .enumerate()
        .map(|(k, &lo)| HistogramBin {
            lo,
            hi: HISTOGRAM_EDGES.get(k + 1).copied().unwrap_or(f64::INFINITY),
            count: 0,
        })
        .collect();
    for v in values {
        let k = HISTOGRAM_EDGES.iter().rposition(|&e| v >= e).unwrap_or(0);
        bins[k].count += 1;
    }
    bins
}

/// Draws `n_samples` unitaries and records, for each, the largest second
/// operator-Schmidt value over all bipartitions together with the distance
/// to the nearest product unitary across that bipartition.
///
/// Sample `i` uses stream `i` of `seed`, so the result is independent of
/// thread scheduling.
pub fn measure_zero_experiment(
    dims: &SystemDims,
    n_samples: u64,
    tol: f64,
    seed: u64,
    arm: SamplerArm,
) -> Result<MeasureZeroStats> {
    if n_samples == 0 {
        return Err(Error::param("n_samples must be at least 1"));
    }
    if dims.n_sites() < 2 {
        return Err(Error::dim(
            "measure-zero experiment needs at least two sites",
        ));
    }
    let parts = Bipartition::all(dims);
    let records: Vec<SampleRecord> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(seed, i).rng();
            let u = match arm {
                SamplerArm::Global => haar_global_unitary(dims, &mut rng),
                SamplerArm::Local => haar_local_unitary(dims, &mut rng),
            };
            let (second, worst) = parts
                .iter()
                .map(|p| {
                    let s = operator_schmidt_values(&u, p).expect("dims match");
                    (s.get(1).copied().unwrap_or(0.0), p)
                })
                .fold((f64::NEG_INFINITY, &parts[0]), |best, cur| {
                    if cur.0 > best.0 {
                        cur
                    } else {
                        best
                    }
                });
            let nearest = nearest_product_unitary(&u, worst, &NearestOptions::default())
                .expect("unitary input");
            SampleRecord {
                sample_id: i,
                second_schmidt: second,
                product_distance: nearest.distance,
                seed,
            }
        })
        .collect();
    let count = records.iter().filter(|r| r.second_schmidt <= tol).count() as u64;
    let min_s = records
        .iter()
        .map(|r| r.second_schmidt)
        .fold(f64::INFINITY, f64::min);
    let max_s = records
        .iter()
        .map(|r| r.second_schmidt)
        .fold(f64::NEG_INFINITY, f64::max);
    let min_d = records
        .iter()
        .map(|r| r.product_distance)
        .fold(f64::INFINITY, f64::min);
    Ok(MeasureZeroStats {
        n_samples,
        dims: dims.clone(),
        tol,
        arm,
        count_product_within_tol: count,
        min_second_schmidt: min_s,
        max_second_schmidt: max_s,
        min_product_distance: min_d,
        histogram: histogram(records.iter().map(|r| r.second_schmidt)),
        records,
    })
}

/// Unitarity check used by the sampler tests.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    crate::tensor::max_abs_diff(&(u.adjoint() * u), &CMatrix::identity(u.nrows(), u.nrows()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::causality::is_causal_unitary;
    use crate::tensor::{max_abs_diff, Bipartition};

    #[test]
    fn same_stream_same_samples() {
        let a = haar_unitary(3, &mut RngStream::new(9, 4).rng());
        let b = haar_unitary(3, &mut RngStream::new(9, 4).rng());
        let c = haar_unitary(3, &mut RngStream::new(9, 5).rng());
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn one_dimensional_haar_is_a_phase() {
        let u = haar_unitary(1, &mut RngStream::new(1, 1).rng());
        assert!((u[(0, 0)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn samples_are_unitary() {
        let mut rng = RngStream::new(10, 0).rng();
        for k in 0..1000 {
            let n = 1 + k % 16;
            assert!(unitarity_defect(&haar_unitary(n, &mut rng)) < 1e-12);
        }
    }

    /// Independent sampler: Gram–Schmidt on Ginibre columns.
    fn gram_schmidt_unitary<R: Rng>(n: usize, rng: &mut R) -> CMatrix {
        let mut g = ginibre(n, n, rng);
        for k in 0..n {
            for j in 0..k {
                let proj: C64 = (0..n).map(|i| g[(i, j)].conj() * g[(i, k)]).sum();
                for i in 0..n {
                    let v = g[(i, j)];
                    g[(i, k)] -= proj * v;
                }
            }
            let norm = (0..n).map(|i| g[(i, k)].norm_sqr()).sum::<f64>().sqrt();
            for i in 0..n {
                g[(i, k)] /= norm;
            }
        }
        g
    }

    #[test]
    fn second_moment_of_trace() {
        // E|tr U|² = 1 on U(n) for n ≥ 1
        let mut rng = RngStream::new(11, 0).rng();
        let n_samples = 100_000;
        let mean = (0..n_samples)
            .map(|_| haar_unitary(4, &mut rng).trace().norm_sqr())
            .sum::<f64>()
            / n_samples as f64;
        assert!((mean - 1.0).abs() < 0.05, "mean {mean}");

        let mut rng = RngStream::new(11, 1).rng();
        let coarse = (0..20_000)
            .map(|_| gram_schmidt_unitary(4, &mut rng).trace().norm_sqr())
            .sum::<f64>()
            / 20_000.0;
        assert!((coarse - 1.0).abs() < 0.05, "oracle mean {coarse}");
    }

    #[test]
    fn left_invariance_statistics() {
        // E|U_00|² = 1/n and E|U_00|⁴ = 2/(n(n+1)), for U and for V·U
        let n = 4;
        let v = haar_unitary(n, &mut RngStream::new(12, 99).rng());
        let mut rng = RngStream::new(12, 0).rng();
        let samples = 40_000;
        let (mut m2, mut m4, mut v2, mut v4) = (0.0, 0.0, 0.0, 0.0);
        for _ in 0..samples {
            let u = haar_unitary(n, &mut rng);
            let a = u[(0, 0)].norm_sqr();
            let b = (&v * &u)[(0, 0)].norm_sqr();
            m2 += a;
            m4 += a * a;
            v2 += b;
            v4 += b * b;
        }
        let s = samples as f64;
        for (x2, x4) in [(m2 / s, m4 / s), (v2 / s, v4 / s)] {
            assert!((x2 - 0.25).abs() < 0.01, "{x2}");
            assert!((x4 - 0.1).abs() < 0.01, "{x4}");
        }
    }

    #[test]
    fn local_samples_are_causal() {
        let dims = SystemDims::new(vec![2, 3, 2]).unwrap();
        let mut rng = RngStream::new(13, 0).rng();
        for _ in 0..1000 {
            let u = haar_local_unitary(&dims, &mut rng);
            assert!(is_causal_unitary(&u, &dims, 1e-10).unwrap());
            for p in Bipartition::all(&dims) {
                assert!(operator_schmidt_values(&u, &p).unwrap()[1] < 1e-12);
            }
        }
    }

    #[test]
    fn phase_redistribution_leaves_product_unchanged() {
        let mut rng = RngStream::new(14, 0).rng();
        let a = haar_unitary(2, &mut rng);
        let b = haar_unitary(3, &mut rng);
        let theta = 0.731;
        let ea = a.map(|z| z * C64::from_polar(1.0, theta));
        let eb = b.map(|z| z * C64::from_polar(1.0, -theta));
        assert!(max_abs_diff(&a.kronecker(&b), &ea.kronecker(&eb)) < 1e-15);
    }

    #[test]
    fn random_channel_is_valid() {
        let dims = SystemDims::new(vec![2, 3]).unwrap();
        let c = random_channel(&dims, 3, &mut RngStream::new(15, 0).rng());
        assert_eq!(c.kraus().len(), 3);
        assert!(c.unitality_defect() < 1e-12);
    }

    #[test]
    fn measure_zero_small_run() {
        let dims = SystemDims::new(vec![2, 2]).unwrap();
        let g = measure_zero_experiment(&dims, 50, 1e-6, 3, SamplerArm::Global).unwrap();
        assert_eq!(g.count_product_within_tol, 0);
        assert!(g.min_second_schmidt > 1e-6);
        assert_eq!(g.histogram.iter().map(|b| b.count).sum::<u64>(), 50);
        let l = measure_zero_experiment(&dims, 50, 1e-6, 3, SamplerArm::Local).unwrap();
        assert_eq!(l.count_product_within_tol, 50);
        assert!(l.min_product_distance < 1e-6);
        assert_eq!(
            g,
            measure_zero_experiment(&dims, 50, 1e-6, 3, SamplerArm::Global).unwrap()
        );
        assert!(measure_zero_experiment(&dims, 0, 1e-6, 3, SamplerArm::Global).is_err());
    }
}
