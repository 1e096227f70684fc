//! Exact posterior computation for model selection and spike-and-slab
//! priors in the sparse normal sequence model `Y_i = θ_i + ε_i`.
//!
//! The three exact algorithms are [`cvdv`] (polynomial coefficients,
//! `O(n³)`), [`hmm`] (forward–backward over the running count of nonzero
//! coordinates, `O(n²)`) and [`discretize`] (a grid over the mixing weight
//! for spike-and-slab priors, `O(n^{3/2})`). All are generic over
//! [`LogNum`] so the same code runs on plain log values or on tracked
//! intervals with guaranteed bounds.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod cvdv;
pub mod discretize;
pub mod error;
pub mod harness;
pub mod hmm;
pub mod lognum;
pub mod posterior;
pub mod priors;
mod quad;
pub mod representability;
pub mod slabs;

pub use error::{Error, Result};
pub use lognum::{LogInterval, LogNum, LogValue, SignedLog};
pub use priors::{MixingPrior, ModelSelectionPrior, PriorFamily};
pub use quad::QuadConfig;
pub use slabs::{CustomSlab, SlabFamily, SlabModel};

/// Validate per-coordinate log densities against the prior dimension.
pub(crate) fn check_likelihoods(n: usize, ln_psi: &[f64], ln_phi: &[f64]) -> Result<()> {
    for len in [ln_psi.len(), ln_phi.len()] {
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, found: len });
        }
    }
    if let Some(x) = ln_psi.iter().chain(ln_phi).find(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "densities must be positive and finite, got log value {x}"
        )));
    }
    Ok(())
}
