use nalgebra::DMatrix;
use serde::{Deserialize, Serialize, Serializer};

use crate::channels::{matrix_to_pairs, KrausChannel};
use crate::error::{Error, Result};
use crate::tensor::{
    embed, hermitian_basis, partial_trace, top_singular_triple, trace_norm, vec_row_major,
    Bipartition, CMatrix, Operator, C64,
};

/// Which side of a bipartition sends.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    LeftToRight,
    RightToLeft,
}

impl Direction {
    pub fn both() -> [Direction; 2] {
        [Direction::LeftToRight, Direction::RightToLeft]
    }

    /// `(sender, receiver)` sites.
    pub fn sides<'a>(&self, p: &'a Bipartition) -> (&'a [usize], &'a [usize]) {
        match self {
            Direction::LeftToRight => (p.left(), p.right()),
            Direction::RightToLeft => (p.right(), p.left()),
        }
    }
}

/// Strength of signalling from `sender` to `receiver`, with the receiver
/// observable (embedded as `1 ⊗ W`) that attains it.
#[derive(Clone, Debug, PartialEq)]
pub struct SignallingReport {
    pub sender: Vec<usize>,
    pub receiver: Vec<usize>,
    pub strength: f64,
    pub witness: Operator,
    pub tol: f64,
}

impl SignallingReport {
    pub fn signals(&self) -> bool {
        self.strength > self.tol
    }
}

impl Serialize for SignallingReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Witness<'a> {
            dims: &'a [usize],
            entries: Vec<[f64; 2]>,
        }
        #[derive(Serialize)]
        struct Repr<'a> {
            direction: (&'a [usize], &'a [usize]),
            strength: f64,
            witness: Witness<'a>,
            tol: f64,
        }
        Repr {
            direction: (&self.sender, &self.receiver),
            strength: self.strength,
            witness: Witness {
                dims: self.witness.dims().as_slice(),
                entries: matrix_to_pairs(self.witness.matrix()),
            },
            tol: self.tol,
        }
        .serialize(serializer)
    }
}

/// Matrix of `O_B ↦ Φ(1_A ⊗ O_B) − 1_A ⊗ tr_A Φ(1_A ⊗ O_B)/d_A` in a
/// Hermitian orthonormal basis of the receiver algebra (columns), with
/// outputs flattened row-major. Returns the basis too.
fn defect_map(
    c: &KrausChannel,
    sender: &[usize],
    receiver: &[usize],
) -> Result<(CMatrix, Vec<CMatrix>)> {
    let dims = c.dims();
    let rdims = dims.select(receiver)?;
    let d_send = dims.select(sender)?.total() as f64;
    let basis = hermitian_basis(rdims.total());
    let d2 = dims.total() * dims.total();
    let mut cols = DMatrix::zeros(d2, basis.len());
    for (k, b) in basis.iter().enumerate() {
        let o = embed(&Operator::new(b.clone(), rdims.clone())?, receiver, dims)?;
        let out = c.apply_heisenberg(&o)?;
        let reduced = partial_trace(&out, sender)?.scale(C64::new(1.0 / d_send, 0.0));
        let diff = out.sub(&embed(&reduced, receiver, dims)?)?;
        for (i, z) in vec_row_major(diff.matrix()).into_iter().enumerate() {
            cols[(i, k)] = z;
        }
    }
    Ok((cols, basis))
}

/// Largest singular value (Frobenius to Frobenius) of the signalling map
/// from `direction`'s sender to its receiver. Zero exactly when
/// `Φ(1 ⊗ M_receiver) ⊆ 1 ⊗ M_receiver`, i.e. when no preparation on the
/// sender side can be seen on the receiver side.
pub fn semicausal_defect(
    c: &KrausChannel,
    p: &Bipartition,
    direction: Direction,
    tol: f64,
) -> Result<SignallingReport> {
    if c.dims() != p.dims() {
        return Err(Error::dim("channel dims do not match the bipartition"));
    }
    let (sender, receiver) = direction.sides(p);
    let (map, basis) = defect_map(c, sender, receiver)?;
    let (strength, _, coeffs) = top_singular_triple(&map);
    let rdims = c.dims().select(receiver)?;
    let d = rdims.total();
    let w = basis
        .iter()
        .zip(&coeffs)
        .fold(CMatrix::zeros(d, d), |acc, (b, &v)| acc + b * v);
    let witness = embed(&Operator::new(w, rdims)?, receiver, c.dims())?;
    Ok(SignallingReport {
        sender: sender.to_vec(),
        receiver: receiver.to_vec(),
        strength,
        witness,
        tol,
    })
}

/// No signalling in either direction across every bipartition.
pub fn is_causal_channel(c: &KrausChannel, tol: f64) -> Result<bool> {
    for p in Bipartition::all(c.dims()) {
        for dir in Direction::both() {
            if semicausal_defect(c, &p, dir, tol)?.signals() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// One row of [`perturbation_probe`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub epsilon: f64,
    pub defect: f64,
    pub choi_distance: f64,
}

/// Walks from a causal channel toward an acausal one: for each `ε` the
/// mixture `ε·acausal + (1−ε)·causal` is evaluated for its signalling
/// defect and its Choi trace-norm distance from `causal`.
pub fn perturbation_probe(
    causal: &KrausChannel,
    acausal: &KrausChannel,
    p: &Bipartition,
    direction: Direction,
    epsilons: &[f64],
    tol: f64,
) -> Result<Vec<ProbeRow>> {
    if causal.dims() != acausal.dims() {
        return Err(Error::dim(
            "causal and acausal channels act on different systems",
        ));
    }
    if semicausal_defect(causal, p, direction, tol)?.signals() {
        return Err(Error::invalid(
            "reference channel signals in the probed direction",
        ));
    }
    if !semicausal_defect(acausal, p, direction, tol)?.signals() {
        return Err(Error::invalid(
            "perturbing channel does not signal in the probed direction",
        ));
    }
    let j_causal = causal.to_choi();
    epsilons
        .iter()
        .map(|&eps| {
            let mixed = KrausChannel::mix(acausal, causal, eps)?;
            let defect = semicausal_defect(&mixed, p, direction, tol)?.strength;
            let diff = mixed.to_choi().entries() - j_causal.entries();
            Ok(ProbeRow {
                epsilon: eps,
                defect,
                choi_distance: trace_norm(&diff),
            })
        })
        .collect()
}
