//! Heisenberg-picture quantum channels `Φ(O) = Σ_k K_k† O K_k`.
//!
//! Channels are unital (`Σ K† K = 1`) and completely positive. Composition
//! follows the Heisenberg convention: `a.compose(&b)` is `a ∘ b`, i.e. `b`
//! is applied to the observable first, which is the *later* operation in time.
//!
//! Choi matrices use `J(Φ) = Σ_ij |i⟩⟨j| ⊗ Φ(|i⟩⟨j|)` with no `1/D`
//! factor, so the identity channel has `tr J = D`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::{haar_local_unitary, RngStream};
use crate::tensor::{
    embed, gates, hermitian_eigen, max_abs_diff, CMatrix, Operator, SystemDims, C64,
};

/// Eigenvalues of a Choi matrix below this are dropped when extracting Kraus operators.
pub const CHOI_EIGEN_CUTOFF: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct KrausChannel {
    kraus: Vec<CMatrix>,
    dims: SystemDims,
}

impl KrausChannel {
    /// Validates shapes and unitality `Σ K† K = 1` within `tol`.
    pub fn new(kraus: Vec<CMatrix>, dims: SystemDims, tol: f64) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::invalid("channel needs at least one Kraus operator"));
        }
        let d = dims.total();
        if let Some(k) = kraus.iter().find(|k| k.shape() != (d, d)) {
            return Err(Error::dim(format!(
                "Kraus operator is {:?}, expected {d}x{d}",
                k.shape()
            )));
        }
        let c = Self { kraus, dims };
        let defect = c.unitality_defect();
        if defect > tol {
            return Err(Error::invalid(format!(
                "Kraus operators are not complete: |Σ K†K − 1| = {defect:.3e}"
            )));
        }
        Ok(c)
    }

    pub fn identity(dims: &SystemDims) -> Self {
        let d = dims.total();
        Self {
            kraus: vec![CMatrix::identity(d, d)],
            dims: dims.clone(),
        }
    }

    /// Unitary channel `O ↦ U† O U`.
    pub fn from_unitary(u: &Operator, tol: f64) -> Result<Self> {
        if !u.is_unitary(tol) {
            return Err(Error::invalid("operator is not unitary"));
        }
        Ok(Self {
            kraus: vec![u.matrix().clone()],
            dims: u.dims().clone(),
        })
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn dims(&self) -> &SystemDims {
        &self.dims
    }

    /// The unitary if this channel has a single Kraus operator that is unitary.
    pub fn as_unitary(&self, tol: f64) -> Option<Operator> {
        match self.kraus.as_slice() {
            [k] if crate::tensor::is_unitary(k, tol) => {
                Some(Operator::new(k.clone(), self.dims.clone()).expect("shape checked"))
            }
            _ => None,
        }
    }

    /// Largest entry of `Σ K† K − 1`.
    pub fn unitality_defect(&self) -> f64 {
        let d = self.dims.total();
        let sum = self
            .kraus
            .iter()
            .fold(CMatrix::zeros(d, d), |acc, k| acc + k.adjoint() * k);
        max_abs_diff(&sum, &CMatrix::identity(d, d))
    }

    /// `Φ(O) = Σ K† O K`.
    pub fn apply_heisenberg(&self, o: &Operator) -> Result<Operator> {
        self.check_dims(o.dims())?;
        Operator::new(self.heisenberg_matrix(o.matrix()), self.dims.clone())
    }

    pub(crate) fn heisenberg_matrix(&self, o: &CMatrix) -> CMatrix {
        let d = self.dims.total();
        self.kraus
            .iter()
            .fold(CMatrix::zeros(d, d), |acc, k| acc + k.adjoint() * o * k)
    }

    /// Schrödinger dual `ρ ↦ Σ K ρ K†`; trace preserving iff the channel is unital.
    pub fn apply_schrodinger(&self, rho: &Operator) -> Result<Operator> {
        self.check_dims(rho.dims())?;
        let d = self.dims.total();
        let out = self.kraus.iter().fold(CMatrix::zeros(d, d), |acc, k| {
            acc + k * rho.matrix() * k.adjoint()
        });
        Operator::new(out, self.dims.clone())
    }

    /// Heisenberg composition `self ∘ inner`: `O ↦ self(inner(O))`.
    pub fn compose(&self, inner: &KrausChannel) -> Result<KrausChannel> {
        self.check_dims(inner.dims())?;
        let kraus = self
            .kraus
            .iter()
            .flat_map(|a| inner.kraus.iter().map(move |b| b * a))
            .collect();
        Ok(Self {
            kraus,
            dims: self.dims.clone(),
        })
    }

    /// Lifts a channel on `sites` of `ambient` to `Φ ⊗ id` on the whole system.
    pub fn embed_local(&self, sites: &[usize], ambient: &SystemDims) -> Result<KrausChannel> {
        let local = ambient.select(sites)?;
        if local != self.dims {
            return Err(Error::dim(format!(
                "channel dims {:?} differ from sites {sites:?} of {:?}",
                self.dims.as_slice(),
                ambient.as_slice()
            )));
        }
        let kraus = self
            .kraus
            .iter()
            .map(|k| {
                let op = Operator::new(k.clone(), local.clone())?;
                Ok(embed(&op, sites, ambient)?.into_matrix())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            kraus,
            dims: ambient.clone(),
        })
    }

    /// Convex combination `p·a + (1−p)·b` by weighting the Kraus lists.
    /// Zero-weight sides are dropped, so `p = 1` returns `a` exactly.
    pub fn mix(a: &KrausChannel, b: &KrausChannel, p: f64) -> Result<KrausChannel> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::param(format!("mixing weight {p} outside [0, 1]")));
        }
        a.check_dims(b.dims())?;
        if p == 1.0 {
            return Ok(a.clone());
        }
        if p == 0.0 {
            return Ok(b.clone());
        }
        let (sa, sb) = (p.sqrt(), (1.0 - p).sqrt());
        let kraus = a
            .kraus
            .iter()
            .map(|k| k.scale(sa))
            .chain(b.kraus.iter().map(|k| k.scale(sb)))
            .collect();
        Ok(Self {
            kraus,
            dims: a.dims.clone(),
        })
    }

    pub fn to_choi(&self) -> ChoiMatrix {
        let d = self.dims.total();
        let mut j = CMatrix::zeros(d * d, d * d);
        for k in &self.kraus {
            // v = Σ_i |i⟩ ⊗ K†|i⟩, component (i, a) = conj(K[i, a])
            let v = nalgebra::DVector::from_fn(d * d, |idx, _| k[(idx / d, idx % d)].conj());
            j += &v * v.adjoint();
        }
        ChoiMatrix {
            entries: j,
            dims: self.dims.clone(),
        }
    }

    pub fn to_json(&self) -> ChannelJson {
        ChannelJson {
            dims: self.dims.as_slice().to_vec(),
            kraus: self.kraus.iter().map(matrix_to_pairs).collect(),
        }
    }

    pub fn from_json(json: &ChannelJson, tol: f64) -> Result<Self> {
        let dims = SystemDims::new(json.dims.clone())?;
        let d = dims.total();
        let kraus = json
            .kraus
            .iter()
            .map(|pairs| pairs_to_matrix(pairs, d))
            .collect::<Result<Vec<_>>>()?;
        Self::new(kraus, dims, tol)
    }

    fn check_dims(&self, other: &SystemDims) -> Result<()> {
        if &self.dims != other {
            return Err(Error::dim(format!(
                "channel dims {:?} vs {:?}",
                self.dims.as_slice(),
                other.as_slice()
            )));
        }
        Ok(())
    }
}

/// Choi matrix `J(Φ) = Σ_ij |i⟩⟨j| ⊗ Φ(|i⟩⟨j|)`, size `D² × D²`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiMatrix {
    entries: CMatrix,
    dims: SystemDims,
}

impl ChoiMatrix {
    /// Validates positivity and `tr_1 J = Φ(1) = 1`.
    pub fn new(entries: CMatrix, dims: SystemDims, tol: f64) -> Result<Self> {
        let d = dims.total();
        if entries.shape() != (d * d, d * d) {
            return Err(Error::dim(format!(
                "Choi matrix is {:?}, expected {}x{}",
                entries.shape(),
                d * d,
                d * d
            )));
        }
        let c = Self { entries, dims };
        let min = c.min_eigenvalue();
        if min < -tol {
            return Err(Error::invalid(format!(
                "Choi matrix not positive: eigenvalue {min:.3e}"
            )));
        }
        let marginal = c.input_marginal();
        if max_abs_diff(&marginal, &CMatrix::identity(d, d)) > tol {
            return Err(Error::invalid(
                "Choi marginal is not the identity (channel not unital)",
            ));
        }
        Ok(c)
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn dims(&self) -> &SystemDims {
        &self.dims
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigen(&self.entries).0[0]
    }

    /// `tr_1 J = Σ_i Φ(|i⟩⟨i|) = Φ(1)`.
    pub fn input_marginal(&self) -> CMatrix {
        let d = self.dims.total();
        CMatrix::from_fn(d, d, |a, b| {
            (0..d).map(|i| self.entries[(i * d + a, i * d + b)]).sum()
        })
    }

    /// Kraus operators from the eigendecomposition, dropping eigenvalues below
    /// [`CHOI_EIGEN_CUTOFF`].
    pub fn to_kraus(&self, tol: f64) -> Result<KrausChannel> {
        let d = self.dims.total();
        let (values, vectors) = hermitian_eigen(&self.entries);
        if values[0] < -tol {
            return Err(Error::invalid(format!(
                "Choi matrix not positive: eigenvalue {:.3e}",
                values[0]
            )));
        }
        let kraus: Vec<CMatrix> = values
            .iter()
            .enumerate()
            .rev()
            .filter(|(_, &l)| l > CHOI_EIGEN_CUTOFF)
            .map(|(col, &l)| {
                let s = l.sqrt();
                CMatrix::from_fn(d, d, |i, a| vectors[(i * d + a, col)].conj() * s)
            })
            .collect();
        KrausChannel::new(kraus, self.dims.clone(), tol)
    }
}

/// Serialized channel: `{"dims": [...], "kraus": [[[re, im], ...], ...]}`,
/// each Kraus operator flattened row-major into `D²` `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelJson {
    pub dims: Vec<usize>,
    pub kraus: Vec<Vec<[f64; 2]>>,
}

pub fn matrix_to_pairs(m: &CMatrix) -> Vec<[f64; 2]> {
    crate::tensor::vec_row_major(m)
        .into_iter()
        .map(|z| [z.re, z.im])
        .collect()
}

pub fn pairs_to_matrix(pairs: &[[f64; 2]], d: usize) -> Result<CMatrix> {
    if pairs.len() != d * d {
        return Err(Error::dim(format!(
            "matrix has {} entries, expected {}",
            pairs.len(),
            d * d
        )));
    }
    Ok(CMatrix::from_fn(d, d, |i, j| {
        let [re, im] = pairs[i * d + j];
        C64::new(re, im)
    }))
}

/// Named channels for fixtures and experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ZooChannel {
    Identity,
    /// `U_0 ⊗ U_1 ⊗ …`, one row-major `[re, im]` matrix per site.
    ProductUnitary {
        factors: Vec<Vec<[f64; 2]>>,
    },
    /// Controlled-NOT, control on site 0; two qubits only.
    Cnot,
    /// Exchange of two equal-dimension sites.
    Swap,
    /// `O ↦ (1−λ) O + λ tr(O)/D · 1`.
    Depolarizing {
        lambda: f64,
    },
    CompletelyDepolarizing,
    /// Site 0 is measured in the computational basis and site 1 is shifted
    /// by the outcome: Kraus `{|k⟩⟨k| ⊗ X^k}`.
    ClassicalOneWay,
    /// Haar-random product unitary drawn from `(seed, stream)`.
    LocalRandom {
        seed: u64,
        stream: u64,
    },
}

pub fn zoo(name: &ZooChannel, dims: &SystemDims) -> Result<KrausChannel> {
    let exact = 1e-12;
    match name {
        ZooChannel::Identity => Ok(KrausChannel::identity(dims)),
        ZooChannel::ProductUnitary { factors } => {
            if factors.len() != dims.n_sites() {
                return Err(Error::param(format!(
                    "{} factors for {} sites",
                    factors.len(),
                    dims.n_sites()
                )));
            }
            let mut u = CMatrix::identity(1, 1);
            for (pairs, &dk) in factors.iter().zip(dims.as_slice()) {
                let f = pairs_to_matrix(pairs, dk)?;
                if !crate::tensor::is_unitary(&f, 1e-10) {
                    return Err(Error::param("product-unitary factor is not unitary"));
                }
                u = u.kronecker(&f);
            }
            KrausChannel::from_unitary(&Operator::new(u, dims.clone())?, 1e-10)
        }
        ZooChannel::Cnot => {
            if dims.as_slice() != [2, 2] {
                return Err(Error::param("CNOT needs dims [2, 2]"));
            }
            KrausChannel::new(vec![gates::cnot()], dims.clone(), exact)
        }
        ZooChannel::Swap => match dims.as_slice() {
            [a, b] if a == b => KrausChannel::new(vec![gates::swap(*a)], dims.clone(), exact),
            _ => Err(Error::param("SWAP needs two sites of equal dimension")),
        },
        ZooChannel::Depolarizing { lambda } => depolarizing(dims, *lambda),
        ZooChannel::CompletelyDepolarizing => depolarizing(dims, 1.0),
        ZooChannel::ClassicalOneWay => {
            let [da, db] = dims.as_slice() else {
                return Err(Error::param("classical one-way channel needs two sites"));
            };
            let x = gates::shift(*db);
            let mut xk = CMatrix::identity(*db, *db);
            let mut kraus = Vec::with_capacity(*da);
            for k in 0..*da {
                kraus.push(gates::projector(*da, k).kronecker(&xk));
                xk = &x * xk;
            }
            KrausChannel::new(kraus, dims.clone(), exact)
        }
        ZooChannel::LocalRandom { seed, stream } => {
            let u = haar_local_unitary(dims, &mut RngStream::new(*seed, *stream).rng());
            KrausChannel::from_unitary(&u, 1e-10)
        }
    }
}

fn depolarizing(dims: &SystemDims, lambda: f64) -> Result<KrausChannel> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::param(format!(
            "depolarizing λ = {lambda} outside [0, 1]"
        )));
    }
    let d = dims.total();
    // twirl over the D² Weyl operators X^a Z^b gives tr(O)/D · 1
    let (x, z) = (gates::shift(d), gates::clock(d));
    let mut kraus = Vec::with_capacity(d * d + 1);
    if lambda < 1.0 {
        kraus.push(CMatrix::identity(d, d).scale((1.0 - lambda).sqrt()));
    }
    if lambda > 0.0 {
        let w = lambda.sqrt() / d as f64;
        let mut xa = CMatrix::identity(d, d);
        for _ in 0..d {
            let mut zb = CMatrix::identity(d, d);
            for _ in 0..d {
                kraus.push((&xa * &zb).scale(w));
                zb = &z * zb;
            }
            xa = &x * xa;
        }
    }
    KrausChannel::new(kraus, dims.clone(), 1e-10)
}
