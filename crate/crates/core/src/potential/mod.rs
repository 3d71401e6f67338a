//! Kernels, energies, capacities, Hausdorff covers and integral-bound checks.

pub mod bounds;
pub mod capacity;
pub mod hausdorff;
pub mod kernel;
pub mod measure;
pub mod oracle;
pub mod smoothing;

pub use bounds::{box_integral_ratio, box_integral_sweep, psi, psi_ratio_sweep, BoxIntegralDomain, BoxIntegralVariant, RatioSweep};
pub use capacity::{capacity, CapacityOptions, CapacityResult};
pub use hausdorff::{greedy_cover, hausdorff_upper, CoverSet};
pub use kernel::{k_beta, metric, parabolic, KernelOrder, MetricKind};
pub use measure::{energy, Diagonal, DiscreteMeasure, PointSet};
pub use smoothing::{mollify, smoothing_check, SmoothingBase, SmoothingCheck, SmoothingOptions};
