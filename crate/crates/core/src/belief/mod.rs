//! Belief representations and their updates.

mod discrete;
mod gaussian;
mod gp;
mod particle;

pub use discrete::DiscreteBelief;
pub use gaussian::{
    gaussian_entropy, kalman_update, posterior_covariance, predicted_obs_cov, GaussianBelief,
    LinearGaussianObsModel,
};
pub use gp::{gp_condition, gp_posterior, ExpKernel, FieldSampler, GpBelief, Point, EXACT_SAMPLER_LIMIT};
pub use particle::{ParticleBelief, ParticleFilter};
