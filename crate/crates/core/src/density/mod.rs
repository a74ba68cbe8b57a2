//! Density models over normalized weight sums.

mod em;
mod gmm;
mod kde;

pub use em::{
    em_fit, em_step, free_parameters, information_criteria, log_likelihood, select_component_count,
    EmOptions, FitSummary, ModelSelection,
};
pub use gmm::{GaussianComponent, GaussianMixture};
pub use kde::{
    iqr, sample_std_dev, silverman_bandwidth, silverman_estimate, BandwidthEstimate,
    KernelDensity, StdDevConvention,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DensityError {
    #[error("need more than {components} data points, found {points}")]
    TooFewPoints { components: usize, points: usize },
    #[error("component count must be at least 1")]
    NoComponents,
    #[error("non-finite data value {0}")]
    NonFiniteData(f64),
    #[error("non-finite log-likelihood")]
    NonFiniteLikelihood,
    #[error("invalid mixture: {0}")]
    InvalidMixture(String),
    #[error("component index {index} out of range ({count} components)")]
    ComponentOutOfRange { index: usize, count: usize },
    #[error("bandwidth needs non-constant data with at least two points")]
    ConstantData,
    #[error("bandwidth must be positive and finite, got {0}")]
    InvalidBandwidth(f64),
    #[error("kernel density needs at least one point")]
    EmptyData,
}

fn check_finite(data: &[f64]) -> Result<(), DensityError> {
    match data.iter().find(|x| !x.is_finite()) {
        Some(&bad) => Err(DensityError::NonFiniteData(bad)),
        None => Ok(()),
    }
}
