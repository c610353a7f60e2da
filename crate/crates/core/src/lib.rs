//! Asymmetric Laplace laws and Monte Carlo verification that normalized geometric
//! sums of independent, non-identically distributed terms converge to them.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod dist;
pub mod engine;
pub mod error;
pub mod lemmas;
pub mod mvdist;
pub mod rng;
pub mod sequence;

#[cfg(test)]
mod testutil;

pub use diagnostics::{diagnose_batch, convergence_sweep, DiagnosticOptions, DiagnosticsReport, Target};
pub use dist::{ab_to_al, al_to_ab, AbParams, AlParams, Moments};
pub use engine::{simulate, SampleBatch, SimConfig};
pub use error::{Error, Result};
pub use mvdist::MvAlParams;
pub use sequence::{CoordinateSpec, DriftProfile, MarginalFamily, SequenceSpec, VarianceProfile};
