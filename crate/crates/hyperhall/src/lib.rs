//! Discrete magnetic Harper operators on Cayley graphs of surface groups and
//! the cyclic-cocycle functionals that measure their Hall conductance.

pub mod conductance;
pub mod config;
pub mod error;
pub mod export;
pub mod hamiltonian;
pub mod hypgeo;
pub mod magnetic;
pub mod operator;
pub mod par;
pub mod pipeline;
pub mod surface_group;
pub mod validation;

pub use error::{Error, ErrorClass, Result};
pub use num_complex::Complex64 as C64;
