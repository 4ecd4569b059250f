//! Two-sided variable-coefficient fractional diffusion on (0, 1):
//!
//! -D(K(x) D I^β_θ u) = f,  u(0) = u(1) = 0,
//!
//! with I^β_θ = θ·lI^β + (1-θ)·rI^β. The crate provides closed-form
//! fractional operators on truncated-power sums, Galerkin and
//! Petrov–Galerkin discretizations, the coercivity counterexample engine,
//! the wellposedness indicator and a verification harness.

pub mod assembly;
pub mod classical;
pub mod error;
pub mod fracops;
pub mod galerkin;
pub mod harness;
pub mod integrate;
pub mod linalg;
pub mod petrov;
pub mod quadrature;
pub mod spaces;

pub use error::{Error, Result};
