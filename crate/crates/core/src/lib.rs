//! Numerics for the "most informative Boolean function" problem: mutual
//! information of noisy functions on the cube, symmetrization on the sphere
//! and the Gaussian limit.

pub mod cube;
pub mod entropy;
pub mod error;
pub mod gaussian;
pub mod montecarlo;
pub mod quadrature;
pub mod rng;
pub mod search;
pub mod sphere;

pub use error::{Error, Result};
