//! Simulation toolkit for a superconducting qubit radiating into a bulk
//! acoustic resonator through a thin piezoelectric film.
//!
//! All quantities are SI internally: Pa, kg/m³, m, and angular frequencies in rad/s.

pub mod boundstates;
pub mod constants;
pub mod dynamics;
pub mod elastodynamics;
pub mod emission;
pub mod error;
pub mod fields;
pub mod materials;
pub mod special;
pub mod spectroscopy;

pub use error::{Error, Result};
