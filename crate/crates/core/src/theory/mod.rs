//! Random-graph generators, distance-bound evaluators and Monte-Carlo bound checks.

pub mod bounds;
pub mod generators;
pub mod special;
pub mod validate;

pub use bounds::{
    alpha_conc, ba_bound_normalized, ba_bound_unnormalized, bound_normalized, bound_unnormalized, count_paths,
    degree_expectation_ba, BoundInputs, BoundValue,
};
pub use generators::{sample_ba_graph, sample_gnm, sample_latent_graph, LatentGraph, LatentModelParams};
pub use special::{double_factorial_ratio, lambert_w, ln_double_factorial_ratio, unit_ball_volume, WBranch};
pub use validate::{validate_bound, BoundKind, GraphModel, ValidationConfig, ViolationReport};
