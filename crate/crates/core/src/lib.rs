//! Numerical laboratory for atoms and molecules in front of a conducting or
//! dielectric half-space: image-charge Hamiltonians, half-space ground-state
//! solvers, multipole expansions and van der Waals asymptotics.

pub mod asymptotics;
pub mod config;
pub mod eigensolver;
pub mod error;
pub mod model;
pub mod multipole;
pub mod potential;
pub mod quadrature;
pub mod spectra;
pub mod wavefn;

pub use error::{Error, ErrorKind, Result};

/// Version string embedded in every output file.
pub const VERSION: &str = concat!("halfspace ", env!("CARGO_PKG_VERSION"));
