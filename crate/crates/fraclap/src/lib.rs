//! Numerical toolkit for the Dirichlet problem of the fractional Laplacian
//! `(-Δ)^s u = f` on bounded domains with the uniform exterior ball condition.
//!
//! The crate is organized around the explicit kernels of the unit ball and
//! their exterior-ball counterparts:
//!
//! - [`kernels`] evaluates the fundamental solution, the ball Green's function
//!   and Poisson kernel, the exterior-ball analogues, and the Kelvin transform.
//! - [`quadrature`] provides the singular-integral machinery: pointwise
//!   principal-value evaluation of `(-Δ)^s`, ball convolutions `G∗f` and
//!   `P∗g`, mollification, and weighted norms.
//! - [`domain`] models balls, lens domains, and finite intersections with
//!   exact boundary-distance and exterior-ball oracles.
//! - [`solver`] composes the ball kernels into an unbiased jump walk that
//!   solves the Dirichlet problem on general exterior-ball domains, plus the
//!   boundary-layer uniqueness diagnostic.
//! - [`verify`] packages the identity and inequality checks into structured
//!   diagnostic reports.

pub mod domain;
pub mod geom;
pub mod kernels;
pub mod quadrature;
pub mod solver;
pub mod special;
pub mod verify;

pub use domain::Domain;
pub use geom::{Ball, Point};
pub use kernels::{FracParams, KernelValue};
pub use quadrature::{QuadConfig, ScalarField, Smoothness};
pub use solver::{WalkConfig, WalkEstimate};
