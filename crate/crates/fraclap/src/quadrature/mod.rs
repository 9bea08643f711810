//! Singular-integral machinery: pointwise principal-value evaluation of
//! `(-Δ)^s`, the ball convolutions `G∗f` and `P∗g`, mollification, the
//! `𝓛_{2s}` tail test, and boundary-weighted norms.

mod adaptive;
mod angular;
mod convolve;
mod field;
mod mollify;
mod norms;
mod pv;

pub use adaptive::{
    integrate_1d, integrate_sqrt_ends, integrate_with_breakpoints,
    integrate_with_roundoff_fallback, tail_integral_alpha, TailOutcome,
};
pub use angular::{sphere_integral, sphere_rule, SphereRule};
pub use angular::MAX_LEVEL as MAX_ANGULAR_LEVEL;
pub use convolve::{convolve_green, convolve_poisson};
pub use field::{RadialTable, ScalarField, Smoothness};
pub use mollify::mollify;
pub use norms::{l2s_membership, weighted_norm, L2sMass, WeightedNorm};
pub use pv::frac_laplacian_pv;

use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error, Clone)]
pub enum QuadError {
    #[error("quadrature tolerance not met: achieved {achieved:.3e}, requested {requested:.3e}")]
    ToleranceNotMet { achieved: f64, requested: f64 },
    #[error("integrability failure: {0}")]
    Integrability(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Kernel(#[from] crate::kernels::KernelError),
}

/// Tolerances and structural radii for all quadrature routines.
#[derive(Clone, Copy, Debug, Deserialize, serde::Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    /// Beyond this radius the principal-value integral switches to its tail
    /// treatment.
    pub tail_split_radius: f64,
    /// Radius of the symmetrized inner ring around the evaluation point.
    pub taylor_ring_radius: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_subdivisions: 10_000,
            tail_split_radius: 10.0,
            taylor_ring_radius: 1e-3,
        }
    }
}

impl QuadConfig {
    pub fn validate(&self) -> Result<(), QuadError> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(QuadError::Domain("tolerances must be positive".into()));
        }
        if self.max_subdivisions == 0 {
            return Err(QuadError::Domain("max_subdivisions must be >= 1".into()));
        }
        if !(self.tail_split_radius > 0.0 && self.taylor_ring_radius > 0.0) {
            return Err(QuadError::Domain("split radii must be positive".into()));
        }
        if self.taylor_ring_radius >= self.tail_split_radius {
            return Err(QuadError::Domain(
                "taylor_ring_radius must be smaller than tail_split_radius".into(),
            ));
        }
        Ok(())
    }

    /// A copy with tolerances loosened by `factor`, for inner integrals whose
    /// error is dominated by an outer loop.
    pub(crate) fn loosened(&self, factor: f64) -> QuadConfig {
        QuadConfig {
            rel_tol: self.rel_tol * factor,
            abs_tol: self.abs_tol * factor,
            ..*self
        }
    }
}
