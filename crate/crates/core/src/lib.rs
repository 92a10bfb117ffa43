//! Compressive inverse scattering for point scatterers.

pub mod error;
pub mod forward;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod quad;
pub mod real;
pub mod recover;
pub mod scene;
pub mod sensing;
pub mod specfun;

pub use error::{Error, Result};
pub use real::Real;

/// `f64` instantiations of the generic types.
pub type Complex = num_complex::Complex64;
pub type Matrix = linalg::CMatrix<f64>;
pub type Lattice = scene::Lattice<f64>;
pub type Target = scene::Target<f64>;
pub type SensorSet = scene::SensorSet<f64>;
pub type SensingMatrix = sensing::SensingMatrix<f64>;
pub type RecoveryResult = recover::RecoveryResult<f64>;
