//! Dense complex multipartite linear algebra.
//!
//! Composite indices are row-major over sites: site 0 is the slowest-varying
//! tensor index, so for dims `[d0, d1]` the basis vector `|i⟩⊗|j⟩` sits at
//! position `i * d1 + j`. Realignment and partial traces depend on this.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Default absolute tolerance for equality checks.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Largest composite dimension accepted for an ambient system.
pub const MAX_TOTAL_DIM: usize = 64;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Ordered local dimensions `d_0, …, d_{N-1}` of a multipartite system.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct SystemDims {
    dims: Vec<usize>,
}

impl SystemDims {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::dim("system needs at least one site"));
        }
        if let Some(d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::dim(format!("local dimension {d} < 2")));
        }
        let total = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .filter(|&t| t <= MAX_TOTAL_DIM)
            .ok_or_else(|| {
                Error::dim(format!(
                    "composite dimension of {dims:?} exceeds {MAX_TOTAL_DIM}"
                ))
            })?;
        debug_assert!(total >= 2);
        Ok(Self { dims })
    }

    /// The trivial one-dimensional system left after tracing out every site.
    pub fn scalar() -> Self {
        Self { dims: Vec::new() }
    }

    pub fn is_scalar(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_sites(&self) -> usize {
        self.dims.len()
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    /// Concatenation `self ⊗ other`.
    pub fn concat(&self, other: &SystemDims) -> SystemDims {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        SystemDims { dims }
    }

    /// Dimensions of the listed sites, in the order given.
    pub fn select(&self, sites: &[usize]) -> Result<SystemDims> {
        self.check_sites(sites)?;
        Ok(SystemDims {
            dims: sites.iter().map(|&s| self.dims[s]).collect(),
        })
    }

    /// Sites not in `sites`, ascending.
    pub fn complement(&self, sites: &[usize]) -> Vec<usize> {
        (0..self.n_sites()).filter(|s| !sites.contains(s)).collect()
    }

    pub(crate) fn check_sites(&self, sites: &[usize]) -> Result<()> {
        for (k, &s) in sites.iter().enumerate() {
            if s >= self.n_sites() {
                return Err(Error::dim(format!(
                    "site {s} out of range for {} sites",
                    self.n_sites()
                )));
            }
            if sites[..k].contains(&s) {
                return Err(Error::dim(format!("site {s} listed twice")));
            }
        }
        Ok(())
    }

    pub(crate) fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dims.len()];
        for k in (0..self.dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.dims[k + 1];
        }
        strides
    }

    pub(crate) fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for k in (0..self.dims.len()).rev() {
            out[k] = index % self.dims[k];
            index /= self.dims[k];
        }
        out
    }
}

impl TryFrom<Vec<usize>> for SystemDims {
    type Error = Error;

    fn try_from(dims: Vec<usize>) -> Result<Self> {
        SystemDims::new(dims)
    }
}

impl From<SystemDims> for Vec<usize> {
    fn from(d: SystemDims) -> Self {
        d.dims
    }
}

/// Composite index of the sub-register `sites` given full digits.
fn sub_index(digits: &[usize], sites: &[usize], dims: &[usize]) -> usize {
    sites.iter().fold(0, |acc, &s| acc * dims[s] + digits[s])
}

/// A split of the sites into two non-empty complementary sets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bipartition {
    left: Vec<usize>,
    right: Vec<usize>,
    dims: SystemDims,
}

impl Bipartition {
    pub fn new(dims: &SystemDims, left: &[usize]) -> Result<Self> {
        dims.check_sites(left)?;
        let mut left = left.to_vec();
        left.sort_unstable();
        let right = dims.complement(&left);
        if left.is_empty() || right.is_empty() {
            return Err(Error::dim("both sides of a bipartition must be non-empty"));
        }
        Ok(Self {
            left,
            right,
            dims: dims.clone(),
        })
    }

    /// Site 0 against the rest for two-site systems, the usual case.
    pub fn first_site(dims: &SystemDims) -> Result<Self> {
        Self::new(dims, &[0])
    }

    /// Every bipartition with site 0 on the left, each unordered split once.
    pub fn all(dims: &SystemDims) -> Vec<Bipartition> {
        let n = dims.n_sites();
        if n < 2 {
            return Vec::new();
        }
        (0..(1usize << (n - 1)) - 1)
            .map(|mask| {
                let left: Vec<usize> = std::iter::once(0)
                    .chain((1..n).filter(|s| mask >> (s - 1) & 1 == 1))
                    .collect();
                Bipartition::new(dims, &left).expect("valid by construction")
            })
            .collect()
    }

    pub fn left(&self) -> &[usize] {
        &self.left
    }

    pub fn right(&self) -> &[usize] {
        &self.right
    }

    pub fn dims(&self) -> &SystemDims {
        &self.dims
    }

    pub fn left_dim(&self) -> usize {
        self.left.iter().map(|&s| self.dims.as_slice()[s]).product()
    }

    pub fn right_dim(&self) -> usize {
        self.right
            .iter()
            .map(|&s| self.dims.as_slice()[s])
            .product()
    }

    pub fn swapped(&self) -> Bipartition {
        Bipartition {
            left: self.right.clone(),
            right: self.left.clone(),
            dims: self.dims.clone(),
        }
    }
}

/// A square complex matrix acting on a multipartite space.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    mat: CMatrix,
    dims: SystemDims,
}

impl Operator {
    pub fn new(mat: CMatrix, dims: SystemDims) -> Result<Self> {
        let d = dims.total();
        if mat.nrows() != d || mat.ncols() != d {
            return Err(Error::dim(format!(
                "matrix is {}x{}, dims {:?} need {d}x{d}",
                mat.nrows(),
                mat.ncols(),
                dims.as_slice()
            )));
        }
        Ok(Self { mat, dims })
    }

    /// Single-site convenience constructor.
    pub fn single(mat: CMatrix) -> Result<Self> {
        let dims = SystemDims::new(vec![mat.nrows()])?;
        Self::new(mat, dims)
    }

    pub fn identity(dims: &SystemDims) -> Self {
        let d = dims.total();
        Self {
            mat: CMatrix::identity(d, d),
            dims: dims.clone(),
        }
    }

    pub fn zeros(dims: &SystemDims) -> Self {
        let d = dims.total();
        Self {
            mat: CMatrix::zeros(d, d),
            dims: dims.clone(),
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn dims(&self) -> &SystemDims {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn adjoint(&self) -> Operator {
        Operator {
            mat: self.mat.adjoint(),
            dims: self.dims.clone(),
        }
    }

    pub fn scale(&self, c: C64) -> Operator {
        Operator {
            mat: &self.mat * c,
            dims: self.dims.clone(),
        }
    }

    pub fn matmul(&self, other: &Operator) -> Result<Operator> {
        self.check_same_dims(other)?;
        Ok(Operator {
            mat: &self.mat * &other.mat,
            dims: self.dims.clone(),
        })
    }

    pub fn add(&self, other: &Operator) -> Result<Operator> {
        self.check_same_dims(other)?;
        Ok(Operator {
            mat: &self.mat + &other.mat,
            dims: self.dims.clone(),
        })
    }

    pub fn sub(&self, other: &Operator) -> Result<Operator> {
        self.check_same_dims(other)?;
        Ok(Operator {
            mat: &self.mat - &other.mat,
            dims: self.dims.clone(),
        })
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.norm()
    }

    /// Hilbert–Schmidt inner product `tr(self† other)`.
    pub fn inner(&self, other: &Operator) -> Result<C64> {
        self.check_same_dims(other)?;
        Ok(frobenius_inner(&self.mat, &other.mat))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        is_hermitian(&self.mat, tol)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        is_unitary(&self.mat, tol)
    }

    /// Largest entrywise deviation from `other`.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        max_abs_diff(&self.mat, &other.mat)
    }

    pub(crate) fn check_same_dims(&self, other: &Operator) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::dim(format!(
                "operator dims {:?} vs {:?}",
                self.dims.as_slice(),
                other.dims.as_slice()
            )));
        }
        Ok(())
    }
}

/// A validated density operator: Hermitian, positive semidefinite, unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    op: Operator,
}

impl DensityOperator {
    pub fn new(op: Operator, tol: f64) -> Result<Self> {
        if !op.is_hermitian(tol) {
            return Err(Error::invalid("density operator is not Hermitian"));
        }
        let tr = op.trace();
        if (tr - ONE).norm() > tol {
            return Err(Error::invalid(format!("density operator has trace {tr}")));
        }
        let (evals, _) = hermitian_eigen(op.matrix());
        let min = evals.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -tol {
            return Err(Error::invalid(format!(
                "density operator has eigenvalue {min:.3e}"
            )));
        }
        Ok(Self { op })
    }

    /// Projector onto the computational basis state with composite `index`.
    pub fn basis_state(dims: &SystemDims, index: usize) -> Result<Self> {
        if index >= dims.total() {
            return Err(Error::dim(format!("basis index {index} out of range")));
        }
        let mut m = CMatrix::zeros(dims.total(), dims.total());
        m[(index, index)] = ONE;
        Ok(Self {
            op: Operator::new(m, dims.clone())?,
        })
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) vector.
    pub fn pure(dims: &SystemDims, psi: &[C64]) -> Result<Self> {
        if psi.len() != dims.total() {
            return Err(Error::dim("state vector length does not match dims"));
        }
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if norm2 == 0.0 {
            return Err(Error::invalid("zero state vector"));
        }
        let d = psi.len();
        let m = CMatrix::from_fn(d, d, |i, j| psi[i] * psi[j].conj() / norm2);
        Ok(Self {
            op: Operator::new(m, dims.clone())?,
        })
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    pub fn dims(&self) -> &SystemDims {
        self.op.dims()
    }

    /// `tr(ρ O)`.
    pub fn expectation(&self, o: &Operator) -> Result<C64> {
        self.op.check_same_dims(o)?;
        Ok((self.op.matrix() * o.matrix()).trace())
    }
}

/// Kronecker product with concatenated dims.
pub fn tensor_product(a: &Operator, b: &Operator) -> Operator {
    Operator {
        mat: a.mat.kronecker(&b.mat),
        dims: a.dims.concat(&b.dims),
    }
}

/// Embeds `op`, acting on `sites` of `ambient`, as `op ⊗ 1` on the rest,
/// with factors placed in ambient site order.
pub fn embed(op: &Operator, sites: &[usize], ambient: &SystemDims) -> Result<Operator> {
    let expected = ambient.select(sites)?;
    if &expected != op.dims() {
        return Err(Error::dim(format!(
            "operator dims {:?} do not match sites {sites:?} of {:?}",
            op.dims().as_slice(),
            ambient.as_slice()
        )));
    }
    let rest = ambient.complement(sites);
    let d = ambient.total();
    let dims = ambient.as_slice();
    let digits: Vec<Vec<usize>> = (0..d).map(|a| ambient.digits(a)).collect();
    let mut out = CMatrix::zeros(d, d);
    for a in 0..d {
        let (ia, ra) = (
            sub_index(&digits[a], sites, dims),
            sub_index(&digits[a], &rest, dims),
        );
        for b in 0..d {
            if sub_index(&digits[b], &rest, dims) == ra {
                out[(a, b)] = op.mat[(ia, sub_index(&digits[b], sites, dims))];
            }
        }
    }
    Operator::new(out, ambient.clone())
}

/// Traces out `sites`; the result lives on the remaining sites in order.
pub fn partial_trace(o: &Operator, sites: &[usize]) -> Result<Operator> {
    let dims = o.dims();
    dims.check_sites(sites)?;
    let keep = dims.complement(sites);
    let out_dims = if keep.is_empty() {
        SystemDims::scalar()
    } else {
        SystemDims {
            dims: keep.iter().map(|&s| dims.as_slice()[s]).collect(),
        }
    };
    let traced_dims = SystemDims {
        dims: sites.iter().map(|&s| dims.as_slice()[s]).collect(),
    };
    let strides = dims.strides();
    let offset = |kept: &[usize], traced: &[usize]| -> usize {
        keep.iter()
            .zip(kept)
            .map(|(&s, &v)| strides[s] * v)
            .sum::<usize>()
            + sites
                .iter()
                .zip(traced)
                .map(|(&s, &v)| strides[s] * v)
                .sum::<usize>()
    };
    let n_out = out_dims.total();
    let n_tr = traced_dims.total();
    let mut out = CMatrix::zeros(n_out, n_out);
    for r in 0..n_out {
        let rd = out_dims.digits(r);
        for c in 0..n_out {
            let cd = out_dims.digits(c);
            let mut acc = ZERO;
            for k in 0..n_tr {
                let kd = traced_dims.digits(k);
                acc += o.mat[(offset(&rd, &kd), offset(&cd, &kd))];
            }
            out[(r, c)] = acc;
        }
    }
    Ok(Operator {
        mat: out,
        dims: out_dims,
    })
}

/// Realignment `R[(i,i'),(j,j')] = o[(i,j),(i',j')]`, with `i, i'` indexing
/// the left side of `p` and `j, j'` the right side. `R` is `dA² × dB²`.
pub fn realign(o: &Operator, p: &Bipartition) -> Result<CMatrix> {
    if o.dims() != p.dims() {
        return Err(Error::dim("bipartition does not match operator dims"));
    }
    let dims = o.dims();
    let (da, db) = (p.left_dim(), p.right_dim());
    let d = dims.total();
    let split: Vec<(usize, usize)> = (0..d)
        .map(|a| {
            let dg = dims.digits(a);
            (
                sub_index(&dg, p.left(), dims.as_slice()),
                sub_index(&dg, p.right(), dims.as_slice()),
            )
        })
        .collect();
    let mut r = CMatrix::zeros(da * da, db * db);
    for (a, &(i, j)) in split.iter().enumerate() {
        for (b, &(ip, jp)) in split.iter().enumerate() {
            r[(i * da + ip, j * db + jp)] = o.mat[(a, b)];
        }
    }
    Ok(r)
}

/// Row-major flattening of a matrix.
pub fn vec_row_major(m: &CMatrix) -> Vec<C64> {
    let (r, c) = m.shape();
    (0..r * c).map(|k| m[(k / c, k % c)]).collect()
}

/// Inverse of [`vec_row_major`] for a square `n × n` matrix.
pub fn unvec_row_major(v: &[C64], n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |i, j| v[i * n + j])
}

/// Unitary factor of the polar decomposition `m = U P`.
///
/// Computed as `W V†` from the SVD `m = W Σ V†`. For rank-deficient `m`
/// the SVD's orthonormal completion fills the null directions, so `U` is
/// always unitary but not unique there.
pub fn polar_unitary(m: &CMatrix) -> Result<CMatrix> {
    if !m.is_square() {
        return Err(Error::dim("polar decomposition needs a square matrix"));
    }
    let svd = m.clone().svd(true, true);
    let (w, vt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    Ok(w * vt)
}

/// Singular values, descending.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = m.singular_values().iter().cloned().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Top singular triple `(σ₁, u₁, v₁)` with `m v₁ = σ₁ u₁`.
///
/// Ties are broken by the ordering nalgebra's SVD produces, which is
/// deterministic for a given input.
pub fn top_singular_triple(m: &CMatrix) -> (f64, Vec<C64>, Vec<C64>) {
    let svd = m.clone().svd(true, true);
    let (u, vt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let k = (0..svd.singular_values.len()).fold(0, |best, k| {
        if svd.singular_values[k] > svd.singular_values[best] {
            k
        } else {
            best
        }
    });
    let left = u.column(k).iter().cloned().collect();
    let right = vt.row(k).iter().map(|z| z.conj()).collect();
    (svd.singular_values[k], left, right)
}

/// All singular triples `(σ_k, u_k, v_k)` with `m·v_k = σ_k·u_k`, by
/// descending `σ_k`.
pub fn singular_triples(m: &CMatrix) -> Vec<(f64, Vec<C64>, Vec<C64>)> {
    let svd = m.clone().svd(true, true);
    let (u, vt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let mut out: Vec<_> = (0..svd.singular_values.len())
        .map(|k| {
            (
                svd.singular_values[k],
                u.column(k).iter().cloned().collect(),
                vt.row(k).iter().map(|z| z.conj()).collect(),
            )
        })
        .collect();
    out.sort_by(|a, b| b.0.total_cmp(&a.0));
    out
}

/// Schatten-1 norm.
pub fn trace_norm(m: &CMatrix) -> f64 {
    m.singular_values().iter().sum()
}

/// `tr(a† b)`.
pub fn frobenius_inner(a: &CMatrix, b: &CMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    m.is_square() && max_abs_diff(m, &m.adjoint()) <= tol
}

pub fn is_unitary(m: &CMatrix, tol: f64) -> bool {
    m.is_square()
        && max_abs_diff(&(m.adjoint() * m), &CMatrix::identity(m.nrows(), m.nrows())) <= tol
}

/// Eigen-decomposition of a Hermitian matrix: eigenvalues ascending, eigenvectors as columns.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    // symmetrize so round-off asymmetry cannot leak into the decomposition
    let h = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), order.len(), |i, j| {
        eig.eigenvectors[(i, order[j])]
    });
    (values, vectors)
}

/// Hermitian orthonormal basis of `M_d` under `tr(B_i B_j) = δ_ij`:
/// the normalized identity, then generalized Gell-Mann matrices
/// (symmetric, antisymmetric, diagonal).
pub fn hermitian_basis(d: usize) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(d * d);
    out.push(CMatrix::identity(d, d).scale(1.0 / (d as f64).sqrt()));
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for j in 0..d {
        for k in j + 1..d {
            let mut s = CMatrix::zeros(d, d);
            s[(j, k)] = C64::new(h, 0.0);
            s[(k, j)] = C64::new(h, 0.0);
            out.push(s);
            let mut a = CMatrix::zeros(d, d);
            a[(j, k)] = C64::new(0.0, -h);
            a[(k, j)] = C64::new(0.0, h);
            out.push(a);
        }
    }
    for l in 1..d {
        let norm = ((l * (l + 1)) as f64).sqrt();
        let mut m = CMatrix::zeros(d, d);
        for i in 0..l {
            m[(i, i)] = C64::new(1.0 / norm, 0.0);
        }
        m[(l, l)] = C64::new(-(l as f64) / norm, 0.0);
        out.push(m);
    }
    out
}

/// Named small matrices used throughout.
pub mod gates {
    use super::{CMatrix, C64, ONE, ZERO};

    pub fn pauli_x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
    }

    pub fn pauli_y() -> CMatrix {
        let i = C64::new(0.0, 1.0);
        CMatrix::from_row_slice(2, 2, &[ZERO, -i, i, ZERO])
    }

    pub fn pauli_z() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
    }

    /// Cyclic shift `|k⟩ ↦ |k+1 mod d⟩`.
    pub fn shift(d: usize) -> CMatrix {
        CMatrix::from_fn(d, d, |i, j| if i == (j + 1) % d { ONE } else { ZERO })
    }

    /// Clock `|k⟩ ↦ ω^k |k⟩`.
    pub fn clock(d: usize) -> CMatrix {
        let w = 2.0 * std::f64::consts::PI / d as f64;
        CMatrix::from_fn(d, d, |i, j| {
            if i == j {
                C64::from_polar(1.0, w * i as f64)
            } else {
                ZERO
            }
        })
    }

    /// `|k⟩⟨k|` in dimension `d`.
    pub fn projector(d: usize, k: usize) -> CMatrix {
        CMatrix::from_fn(d, d, |i, j| if i == k && j == k { ONE } else { ZERO })
    }

    /// Controlled-NOT on two qubits, control on the first factor.
    pub fn cnot() -> CMatrix {
        CMatrix::from_fn(4, 4, |i, j| {
            let target = match j {
                2 => 3,
                3 => 2,
                k => k,
            };
            if i == target {
                ONE
            } else {
                ZERO
            }
        })
    }

    /// Exchange of two `d`-level systems.
    pub fn swap(d: usize) -> CMatrix {
        CMatrix::from_fn(d * d, d * d, |i, j| {
            let (a, b) = (j / d, j % d);
            if i == b * d + a {
                ONE
            } else {
                ZERO
            }
        })
    }
}
