//! Sorkin-style causality analysis for finite-dimensional quantum channels,
//! Haar-sampling evidence that causal unitaries are a null set, and an exact
//! lattice check of the acausal `e^{iφ(f)²}` conjugation identity for a free
//! scalar field.
//!
//! Module map:
//! - [`tensor`]: multipartite dense linear algebra (tensor products,
//!   partial traces, realignment, polar decomposition).
//! - [`channels`]: Heisenberg-picture Kraus channels and Choi matrices.
//! - [`causality`]: Sorkin violation, the `Γ` functional, semicausal
//!   defects, operator-Schmidt tests and nearest product unitaries.
//! - [`sampling`]: Haar sampling and the measure-zero experiment.
//! - [`lattice`]: 1+1D lattice Klein–Gordon Green functions, the smeared
//!   commutator `Δ(f, g)` and affine field conjugations.
//! - [`cli`]: the experiment runner behind the `qcausal` binary.

pub mod causality;
pub mod channels;
pub mod cli;
pub mod error;
pub mod lattice;
pub mod sampling;
pub mod tensor;

pub use error::{Error, Result};
