//! Exact sampling of the linear stochastic heat equation on `[0, 1]` with
//! Neumann boundary conditions, its drift perturbations, and numerical
//! checks of hitting, capacity, dimension and modulus predictions.

pub mod drift;
pub mod error;
pub mod field;
pub mod hitting;
pub mod io;
pub mod modulus;
pub mod numeric;
pub mod potential;
pub mod rng;
pub mod verify;

pub use error::{Error, Result};
