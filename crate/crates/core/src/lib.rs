//! Desk-scale toolkit for periodic L0-regular gl(2) spin chains.
//!
//! The crate is organised bottom-up: elementary kernels, representation
//! matrices and fused R-matrices, chain operators, Bethe equations, string
//! counting, thermodynamic densities, RSOS path spaces and scattering data.

pub mod bethe;
pub mod chain;
pub mod error;
pub mod quad;
pub mod repkit;
pub mod rsos;
pub mod scattering;
pub mod special_functions;
pub mod strings;
pub mod thermo;

pub use error::{Error, Result};
pub use num_complex::Complex64;
