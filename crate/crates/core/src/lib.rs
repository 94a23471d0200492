//! Numerical engine for a renormalized white-noise calculus on a truncated
//! Gaussian basis: spectral basis tables, chaos-expansion algebra, quadratic
//! white-noise functionals, pathwise SDE solving, and renormalization checks.

pub mod basis;
pub mod chaos;
pub mod cli;
pub mod config;
pub mod error;
pub mod gaussian;
pub mod quadrature;
pub mod renorm;
pub mod report;
pub mod qwn;
pub mod scalar;
pub mod sde;
pub mod suite;

pub use error::{Error, Result};
