use crate::channels::KrausChannel;
use crate::error::{Error, Result};
use crate::tensor::{
    embed, hermitian_basis, partial_trace, Bipartition, DensityOperator, Operator, SystemDims, C64,
};

/// Whether `c` acts as the identity on every operator supported on the
/// complement of `sites`. Checked on a Hermitian basis of the complement
/// algebra, which spans it.
pub fn is_local_to(c: &KrausChannel, sites: &[usize], tol: f64) -> Result<bool> {
    let dims = c.dims();
    dims.check_sites(sites)?;
    let rest = dims.complement(sites);
    if rest.is_empty() {
        return Ok(true);
    }
    let rest_dims = dims.select(&rest)?;
    for b in hermitian_basis(rest_dims.total()) {
        let o = embed(&Operator::new(b, rest_dims.clone())?, &rest, dims)?;
        if c.apply_heisenberg(&o)?.max_abs_diff(&o) > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Whether `o = 1 ⊗ O'` with `O'` acting on `sites` only.
pub fn is_supported_on(o: &Operator, sites: &[usize], tol: f64) -> Result<bool> {
    let dims = o.dims();
    dims.check_sites(sites)?;
    let rest = dims.complement(sites);
    if rest.is_empty() {
        return Ok(true);
    }
    let d_rest = dims.select(&rest)?.total() as f64;
    let reduced = partial_trace(o, &rest)?.scale(C64::new(1.0 / d_rest, 0.0));
    let rebuilt = embed(&reduced, sites, dims)?;
    Ok(rebuilt.max_abs_diff(o) <= tol)
}

fn check_dims(a: &SystemDims, b: &SystemDims, what: &str) -> Result<()> {
    if a != b {
        return Err(Error::dim(format!(
            "{what} dims {:?} differ from {:?}",
            a.as_slice(),
            b.as_slice()
        )));
    }
    Ok(())
}

/// `ρ(Φ_S(Ψ(O_R)) − Ψ(O_R))` for a preparation `prep` local to
/// `prep_sites` and an observable supported on the disjoint `obs_sites`.
///
/// Linear in `psi`; it vanishes for every admissible triple exactly when
/// `psi` cannot carry a signal from `prep_sites` to `obs_sites`.
pub fn gamma_functional(
    psi: &KrausChannel,
    prep: &KrausChannel,
    prep_sites: &[usize],
    o: &Operator,
    obs_sites: &[usize],
    rho: &DensityOperator,
    tol: f64,
) -> Result<C64> {
    let dims = psi.dims();
    check_dims(prep.dims(), dims, "preparation")?;
    check_dims(o.dims(), dims, "observable")?;
    check_dims(rho.dims(), dims, "state")?;
    if let Some(s) = prep_sites.iter().find(|s| obs_sites.contains(s)) {
        return Err(Error::invalid(format!(
            "site {s} is in both the preparation and the observable support"
        )));
    }
    if !is_local_to(prep, prep_sites, tol)? {
        return Err(Error::invalid(format!(
            "preparation does not act trivially outside sites {prep_sites:?}"
        )));
    }
    if !is_supported_on(o, obs_sites, tol)? {
        return Err(Error::invalid(format!(
            "observable is not supported on sites {obs_sites:?}"
        )));
    }
    let evolved = psi.apply_heisenberg(o)?;
    let prepared = prep.apply_heisenberg(&evolved)?;
    Ok(rho.expectation(&prepared)? - rho.expectation(&evolved)?)
}

/// State, local preparation on the left of `partition`, intervention, and
/// an observable on the right of `partition`.
#[derive(Clone, Debug)]
pub struct SorkinScenario {
    rho: DensityOperator,
    prep: KrausChannel,
    intervention: KrausChannel,
    observable: Operator,
    partition: Bipartition,
    tol: f64,
}

impl SorkinScenario {
    /// All arguments act on the full system; locality of `prep` and the
    /// support of `observable` are checked.
    pub fn new(
        rho: DensityOperator,
        prep: KrausChannel,
        intervention: KrausChannel,
        observable: Operator,
        partition: Bipartition,
        tol: f64,
    ) -> Result<Self> {
        let dims = partition.dims();
        check_dims(rho.dims(), dims, "state")?;
        check_dims(prep.dims(), dims, "preparation")?;
        check_dims(intervention.dims(), dims, "intervention")?;
        check_dims(observable.dims(), dims, "observable")?;
        if !is_local_to(&prep, partition.left(), tol)? {
            return Err(Error::invalid(
                "preparation is not local to the sender sites",
            ));
        }
        if !is_supported_on(&observable, partition.right(), tol)? {
            return Err(Error::invalid(
                "observable is not supported on the receiver sites",
            ));
        }
        Ok(Self {
            rho,
            prep,
            intervention,
            observable,
            partition,
            tol,
        })
    }

    /// Builds the scenario from a preparation on the sender sites and an
    /// observable on the receiver sites, embedding both.
    pub fn from_local_parts(
        rho: DensityOperator,
        local_prep: &KrausChannel,
        intervention: KrausChannel,
        local_observable: &Operator,
        partition: Bipartition,
        tol: f64,
    ) -> Result<Self> {
        let dims = partition.dims().clone();
        let prep = local_prep.embed_local(partition.left(), &dims)?;
        let observable = embed(local_observable, partition.right(), &dims)?;
        Self::new(rho, prep, intervention, observable, partition, tol)
    }

    pub fn partition(&self) -> &Bipartition {
        &self.partition
    }

    pub fn intervention(&self) -> &KrausChannel {
        &self.intervention
    }

    /// Same scenario with a different intervention.
    pub fn with_intervention(&self, intervention: KrausChannel) -> Result<Self> {
        check_dims(intervention.dims(), self.partition.dims(), "intervention")?;
        Ok(Self {
            intervention,
            ..self.clone()
        })
    }

    /// `Γ` of this scenario's `(ρ, prep, O)` evaluated on `psi`.
    pub fn gamma(&self, psi: &KrausChannel) -> Result<C64> {
        gamma_functional(
            psi,
            &self.prep,
            self.partition.left(),
            &self.observable,
            self.partition.right(),
            &self.rho,
            self.tol,
        )
    }
}

/// `tr(ρ Φ_prep(Φ_int(O))) − tr(ρ Φ_int(O))`, the real part of
/// [`gamma_functional`] at the scenario's own intervention.
pub fn sorkin_violation(s: &SorkinScenario) -> Result<f64> {
    Ok(s.gamma(&s.intervention)?.re)
}
