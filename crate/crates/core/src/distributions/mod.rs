//! Random-variate generation and density evaluation for every distribution
//! the Gibbs sweep touches.
//!
//! The univariate and matrix-variate workhorses (gamma, Dirichlet,
//! multivariate normal, truncated normal, Wishart, inverse Gaussian) are
//! standard; the generalized inverse Gaussian is sampled with a
//! continued-fraction Markov chain whose stationary law is the target, and
//! the matrix-GIG is reduced to one GIG draw plus one Wishart draw through
//! the Matsumoto-Yor property.
//!
//! Every sampler is a deterministic function of its parameters and the
//! provided generator state, so equal [`crate::RngStream`] keys reproduce
//! draws bit-for-bit.

mod gig;
mod mgig;
mod mvn;
mod univariate;
mod wishart;

pub use gig::{
    gig_logpdf, gig_markov_step, gig_moment, sample_gig, GigParams, GIG_COLD_START, GIG_COLD_STEPS,
};
pub use mgig::{mgig_log_unnorm_density, sample_mgig, MgigParams};
pub use mvn::{sample_mvn, sample_mvn_chol};
pub use univariate::{
    inverse_gaussian_logpdf, sample_dirichlet, sample_gamma, sample_inverse_gaussian,
    sample_truncated_normal_positive, truncated_normal_positive_mean,
};
pub use wishart::{sample_wishart, WishartParams};
