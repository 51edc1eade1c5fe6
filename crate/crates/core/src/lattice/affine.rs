use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{pauli_jordan, spacelike_separated, LatticeSpec, TestFunction};
use crate::error::{Error, Result};

/// Handle of a test function registered in a [`FieldAlgebra`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FieldId(pub usize);

/// `scalar·1 + Σ linear[i]·φ(f_i)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AffineField {
    pub scalar: f64,
    pub linear: BTreeMap<FieldId, f64>,
}

impl AffineField {
    pub fn constant(c: f64) -> Self {
        Self {
            scalar: c,
            linear: BTreeMap::new(),
        }
    }

    /// `φ(f)`.
    pub fn field(f: FieldId) -> Self {
        Self {
            scalar: 0.0,
            linear: BTreeMap::from([(f, 1.0)]),
        }
    }

    pub fn coeff(&self, f: FieldId) -> f64 {
        self.linear.get(&f).copied().unwrap_or(0.0)
    }

    /// Vacuum expectation value: every `φ(f)` has zero mean, leaving the scalar.
    pub fn vacuum_expectation(&self) -> f64 {
        self.scalar
    }

    fn add_term(&mut self, f: FieldId, c: f64) {
        if c != 0.0 {
            *self.linear.entry(f).or_insert(0.0) += c;
        }
    }
}

/// Append-only registry of test functions on one lattice, with the
/// conjugation rules for the field operators built from them.
#[derive(Clone, Debug)]
pub struct FieldAlgebra {
    spec: LatticeSpec,
    functions: Vec<TestFunction>,
}

impl FieldAlgebra {
    pub fn new(spec: LatticeSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            spec,
            functions: Vec::new(),
        })
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn register(&mut self, f: TestFunction) -> Result<FieldId> {
        f.check_within(&self.spec, "test function")?;
        self.functions.push(f);
        Ok(FieldId(self.functions.len() - 1))
    }

    pub fn get(&self, id: FieldId) -> Result<&TestFunction> {
        self.functions
            .get(id.0)
            .ok_or_else(|| Error::param(format!("unknown test function id {}", id.0)))
    }

    pub fn delta(&self, f: FieldId, g: FieldId) -> Result<f64> {
        pauli_jordan(&self.spec, self.get(f)?, self.get(g)?)
    }

    fn check(&self, a: &AffineField) -> Result<()> {
        a.linear.keys().try_for_each(|&id| self.get(id).map(|_| ()))
    }

    /// `e^{iλφ(h)} a e^{−iλφ(h)}`: each `φ(f_i)` picks up the scalar
    /// `−λΔ(h, f_i)`. Exact, since the commutator with a field is central.
    pub fn weyl_conjugate(&self, a: &AffineField, h: FieldId, lambda: f64) -> Result<AffineField> {
        self.check(a)?;
        let mut out = a.clone();
        for (&f, &c) in &a.linear {
            out.scalar -= lambda * self.delta(h, f)? * c;
        }
        Ok(out)
    }

    /// `e^{isφ(f)²} a e^{−isφ(f)²}`: each `φ(g)` becomes
    /// `φ(g) − 2sΔ(f, g)·φ(f)`. Exact, because the double commutator with
    /// `φ(f)` already vanishes on linear terms.
    pub fn gaussian_square_conjugate(
        &self,
        a: &AffineField,
        f: FieldId,
        s: f64,
    ) -> Result<AffineField> {
        self.check(a)?;
        self.get(f)?;
        let mut out = a.clone();
        for (&g, &c) in &a.linear {
            out.add_term(f, -2.0 * s * self.delta(f, g)? * c);
        }
        Ok(out)
    }

    /// `e^{iλφ(h)} e^{iφ(f)²} φ(g) e^{−iφ(f)²} e^{−iλφ(h)}`, which works out to
    /// `φ(g) − 2Δ(f, g)·φ(f) − 2λΔ(f, g)Δ(f, h)·1`.
    ///
    /// `h` and `g` must have spacelike separated supports.
    pub fn sorkin_chain(
        &self,
        f: FieldId,
        g: FieldId,
        h: FieldId,
        lambda: f64,
    ) -> Result<AffineField> {
        let (sg, sh) = (self.get(g)?.support(), self.get(h)?.support());
        if !spacelike_separated(&self.spec, &sh, &sg) {
            return Err(Error::Geometry(
                "supports of h and g are not spacelike separated".into(),
            ));
        }
        let inner = self.gaussian_square_conjugate(&AffineField::field(g), f, 1.0)?;
        self.weyl_conjugate(&inner, h, lambda)
    }

    /// `d/dλ ⟨sorkin_chain(f, g, h, λ)⟩` in the vacuum, equal to
    /// `−2Δ(f, g)Δ(f, h)`. The chain is affine in `λ`, so the difference of
    /// the `λ = 1` and `λ = 0` expectations is the derivative exactly.
    pub fn signalling_derivative(&self, f: FieldId, g: FieldId, h: FieldId) -> Result<f64> {
        let one = self.sorkin_chain(f, g, h, 1.0)?.vacuum_expectation();
        let zero = self.sorkin_chain(f, g, h, 0.0)?.vacuum_expectation();
        Ok(one - zero)
    }
}
