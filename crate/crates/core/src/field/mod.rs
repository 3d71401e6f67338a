//! The drift-free Gaussian field: spectral model, exact covariances,
//! sampling and densities.

pub mod covariance;
pub mod density;
pub mod patch;
pub mod sampler;
pub mod spec;
pub mod spectral;

pub use covariance::{
    field_covariance, increment_second_moment, pair_stats, std_dev_modulus, CovarianceSource, ExactKernel, FieldCovariance,
    IncrementMoment, Moments, PairStats, StdDevModulus,
};
pub use density::{a2_envelope, a2_threshold, one_point_density, two_point_density};
pub use patch::PatchSampler;
pub use sampler::{sample_ensemble, sample_path, sample_path_split, SamplePath};
pub use spec::{DriftDescriptor, FieldSpec, GridSpec, StPoint};
pub use spectral::{lambda, mode_covariance, mode_variance, phi, SpectralModel};
