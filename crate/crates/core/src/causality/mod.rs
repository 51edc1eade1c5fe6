//! Deciders and functionals for Sorkin-style signalling.
//!
//! A channel on a multipartite system is *causal* when no preparation on
//! one side of any bipartition can be detected by an observable on the
//! other side after the channel acts. Finite dimension lets us decide
//! this exactly through the containment `Φ(1_A ⊗ O_B) ∈ 1_A ⊗ M_B`
//! ([`semicausal_defect`]); [`sorkin_violation`] evaluates the
//! operational condition on one concrete scenario and serves as a
//! sampled cross-check.

mod defect;
mod scenario;
mod schmidt;

pub use defect::{
    is_causal_channel, perturbation_probe, semicausal_defect, Direction, ProbeRow, SignallingReport,
};
pub use scenario::{
    gamma_functional, is_local_to, is_supported_on, sorkin_violation, SorkinScenario,
};
pub use schmidt::{
    is_causal_unitary, nearest_product_unitary, operator_schmidt_values, NearestOptions,
    NearestProduct,
};
