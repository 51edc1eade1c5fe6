use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{
    polar_unitary, realign, singular_triples, singular_values, unvec_row_major, vec_row_major,
    Bipartition, CMatrix, Operator, SystemDims, C64, DEFAULT_TOL,
};

/// Operator-Schmidt coefficients of `u` across `p`, descending.
/// Their squares sum to `‖u‖_F²`; `u` is a product `A ⊗ B` iff the second is zero.
pub fn operator_schmidt_values(u: &Operator, p: &Bipartition) -> Result<Vec<f64>> {
    Ok(singular_values(&realign(u, p)?))
}

/// `u` factorizes as `U_0 ⊗ … ⊗ U_{N−1}` up to `tol`, checked on every
/// bipartition. Global phases are irrelevant.
pub fn is_causal_unitary(u: &Operator, dims: &SystemDims, tol: f64) -> Result<bool> {
    if u.dims() != dims {
        return Err(Error::dim("unitary dims do not match"));
    }
    if !u.is_unitary(DEFAULT_TOL.max(tol)) {
        return Err(Error::invalid("operator is not unitary"));
    }
    for p in Bipartition::all(dims) {
        let s = operator_schmidt_values(u, &p)?;
        if s.get(1).copied().unwrap_or(0.0) > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NearestOptions {
    /// Stop once an iteration improves the overlap by less than this.
    pub tol: f64,
    pub max_iter: usize,
    /// Leading operator-Schmidt terms used as starting points.
    pub starts: usize,
}

impl Default for NearestOptions {
    fn default() -> Self {
        Self {
            tol: 1e-13,
            max_iter: 500,
            starts: 16,
        }
    }
}

/// Best product approximation `e^{iθ} (left ⊗ right)` of a unitary.
#[derive(Clone, Debug, PartialEq)]
pub struct NearestProduct {
    pub left: CMatrix,
    pub right: CMatrix,
    /// `e^{iθ}` aligning the product with the target.
    pub phase: C64,
    /// `|tr((left ⊗ right)† u)|`, at most `D`.
    pub overlap: f64,
    /// `min_θ ‖u − e^{iθ} left ⊗ right‖_F = √(2D − 2·overlap)`.
    pub distance: f64,
    /// Sweeps of the winning start.
    pub iterations: usize,
    pub converged: bool,
    /// Overlap of the winning start after initialization and after each
    /// sweep; non-decreasing.
    pub history: Vec<f64>,
}

/// `tr((a ⊗ b)† u)` in realigned form: `vec(a)† R conj(vec(b))`.
fn product_overlap(r: &CMatrix, a: &CMatrix, b: &CMatrix) -> C64 {
    let va = vec_row_major(a);
    let vb = vec_row_major(b);
    let mut acc = C64::new(0.0, 0.0);
    for (i, x) in va.iter().enumerate() {
        let row: C64 = vb
            .iter()
            .enumerate()
            .map(|(j, y)| r[(i, j)] * y.conj())
            .sum();
        acc += x.conj() * row;
    }
    acc
}

fn conj_column(m: &CMatrix) -> CMatrix {
    let v = vec_row_major(m);
    CMatrix::from_iterator(v.len(), 1, v.into_iter().map(|z| z.conj()))
}

struct Ascent {
    left: CMatrix,
    right: CMatrix,
    history: Vec<f64>,
    iterations: usize,
    converged: bool,
}

/// Alternating polar updates: with one factor fixed, the overlap is a
/// linear functional of the other, maximized by the polar factor of its
/// representing matrix.
fn ascend(
    r: &CMatrix,
    rt: &CMatrix,
    mut left: CMatrix,
    mut right: CMatrix,
    opts: &NearestOptions,
) -> Result<Ascent> {
    let (da, db) = (left.nrows(), right.nrows());
    let mut history = vec![product_overlap(r, &left, &right).norm()];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let m_left = r * conj_column(&right);
        left = polar_unitary(&unvec_row_major(m_left.as_slice(), da))?;
        let m_right = rt * conj_column(&left);
        right = polar_unitary(&unvec_row_major(m_right.as_slice(), db))?;
        let ov = product_overlap(r, &left, &right).norm();
        let gain = ov - history.last().copied().unwrap_or(0.0);
        history.push(ov);
        if gain < opts.tol {
            converged = true;
            break;
        }
    }
    Ok(Ascent {
        left,
        right,
        history,
        iterations,
        converged,
    })
}

/// Maximizes `|tr((u₁ ⊗ u₂)† u)|` over unitary factors.
///
/// Each of the leading `opts.starts` operator-Schmidt terms `σ_k A_k ⊗ B_k`
/// seeds an alternating polar ascent from the polar factors of `A_k` and
/// `B_k`; the best local maximum wins. A single start from the leading
/// term can stall below the optimum on generic inputs.
pub fn nearest_product_unitary(
    u: &Operator,
    p: &Bipartition,
    opts: &NearestOptions,
) -> Result<NearestProduct> {
    if opts.starts == 0 {
        return Err(Error::param("at least one start is needed"));
    }
    let r = realign(u, p)?;
    let rt = r.transpose();
    let (da, db) = (p.left_dim(), p.right_dim());
    let score = |x: &Ascent| x.history.last().copied().unwrap_or(0.0);
    let mut best: Option<Ascent> = None;
    for (k, (_, a, b)) in singular_triples(&r)
        .into_iter()
        .take(opts.starts)
        .enumerate()
    {
        // an exact product already attains the bound D
        if k > 0
            && best
                .as_ref()
                .is_some_and(|b| score(b) >= u.dim() as f64 - 1e-12)
        {
            break;
        }
        let b: Vec<C64> = b.iter().map(|z| z.conj()).collect();
        let left = polar_unitary(&unvec_row_major(&a, da))?;
        let right = polar_unitary(&unvec_row_major(&b, db))?;
        let run = ascend(&r, &rt, left, right, opts)?;
        if best.as_ref().is_none_or(|b| score(&run) > score(b)) {
            best = Some(run);
        }
    }
    let best = best.expect("at least one singular triple");
    let t = product_overlap(&r, &best.left, &best.right);
    let overlap = t.norm();
    let phase = if overlap > 0.0 {
        t / overlap
    } else {
        C64::new(1.0, 0.0)
    };
    let d = u.dim() as f64;
    Ok(NearestProduct {
        left: best.left,
        right: best.right,
        phase,
        overlap,
        distance: (2.0 * d - 2.0 * overlap).max(0.0).sqrt(),
        iterations: best.iterations,
        converged: best.converged,
        history: best.history,
    })
}
