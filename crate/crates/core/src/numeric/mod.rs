//! Numerical building blocks shared across the crate.

pub mod dct;
pub mod quad;
pub mod stats;
pub mod sum;
