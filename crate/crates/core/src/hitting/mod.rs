//! Hitting probabilities, level sets and box-counting dimensions.

pub mod boxes;
pub mod dimension;
pub mod estimate;
pub mod levelset;
pub mod rare;

pub use boxes::{dyadic_boxes, DyadicBox};
pub use dimension::{box_count, box_dimension, BoxDimension};
pub use estimate::{
    exponent_fit, hit_probability, patch_hit_counts, patch_hit_probability, write_estimates_csv, write_fit_csv,
    Estimator, ExponentFit, FloorPolicy, HitEstimate, Region, Target,
};
pub use levelset::{level_set, resolution_floor, LevelSetCloud, Selector};
pub use rare::{conditional_hit_probability, union_gaussian_measure, ConditionalOptions};
