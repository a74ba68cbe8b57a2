use serde::{Deserialize, Serialize};

use super::DensityError;
use crate::normal::{log_sum_exp, normal_cdf, normal_ln_pdf, normal_pdf};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent {
    pub weight: f64,
    pub mean: f64,
    pub std_dev: f64,
}

/// Univariate Gaussian mixture with components sorted by ascending mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<GaussianComponent>", into = "Vec<GaussianComponent>")]
pub struct GaussianMixture {
    components: Vec<GaussianComponent>,
}

impl TryFrom<Vec<GaussianComponent>> for GaussianMixture {
    type Error = DensityError;

    /// Validates like [`GaussianMixture::new`] but keeps the weights as
    /// given, so serialized models load back bit for bit.
    fn try_from(components: Vec<GaussianComponent>) -> Result<Self, Self::Error> {
        Self::build(components, false)
    }
}

impl From<GaussianMixture> for Vec<GaussianComponent> {
    fn from(m: GaussianMixture) -> Self {
        m.components
    }
}

impl GaussianMixture {
    /// Validates and sorts the components. Mixture weights must sum to one
    /// within `1e-9`; they are rescaled to sum to one exactly (up to rounding).
    pub fn new(components: Vec<GaussianComponent>) -> Result<Self, DensityError> {
        Self::build(components, true)
    }

    fn build(mut components: Vec<GaussianComponent>, rescale: bool) -> Result<Self, DensityError> {
        if components.is_empty() {
            return Err(DensityError::NoComponents);
        }
        for c in &components {
            if !(c.weight > 0.0 && c.weight <= 1.0) {
                return Err(DensityError::InvalidMixture(format!(
                    "mixture weight {} outside (0, 1]",
                    c.weight
                )));
            }
            if !c.mean.is_finite() {
                return Err(DensityError::InvalidMixture(format!("mean {}", c.mean)));
            }
            if !(c.std_dev > 0.0 && c.std_dev.is_finite()) {
                return Err(DensityError::InvalidMixture(format!(
                    "standard deviation {}",
                    c.std_dev
                )));
            }
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(DensityError::InvalidMixture(format!(
                "mixture weights sum to {total}"
            )));
        }
        if rescale && total != 1.0 {
            for c in &mut components {
                c.weight /= total;
            }
        }
        components.sort_by(|a, b| a.mean.total_cmp(&b.mean));
        Ok(Self { components })
    }

    pub(crate) fn from_sorted_unchecked(components: Vec<GaussianComponent>) -> Self {
        Self { components }
    }

    pub fn components(&self) -> &[GaussianComponent] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Index of the component with the largest mean.
    pub fn highest_component(&self) -> usize {
        self.components.len() - 1
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * normal_pdf(x, c.mean, c.std_dev))
            .sum()
    }

    /// Weighted density of component `k` alone.
    pub fn component_pdf(&self, k: usize, x: f64) -> f64 {
        let c = &self.components[k];
        c.weight * normal_pdf(x, c.mean, c.std_dev)
    }

    /// `ln(weight_k) + ln N(x | mean_k, std_dev_k)` for every component.
    pub fn ln_weighted_densities(&self, x: f64) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| c.weight.ln() + normal_ln_pdf(x, c.mean, c.std_dev))
            .collect()
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        log_sum_exp(&self.ln_weighted_densities(x))
    }

    /// Mixture CDF, `sum_m weight_m * Phi((x - mean_m) / std_dev_m)`.
    pub fn cdf(&self, x: f64) -> f64 {
        let p: f64 = self
            .components
            .iter()
            .map(|c| c.weight * normal_cdf(x, c.mean, c.std_dev))
            .sum();
        p.clamp(0.0, 1.0)
    }

    /// Posterior probability that `x` was drawn from component `k`.
    pub fn component_posterior(&self, x: f64, k: usize) -> Result<f64, DensityError> {
        if k >= self.components.len() {
            return Err(DensityError::ComponentOutOfRange {
                index: k,
                count: self.components.len(),
            });
        }
        Ok(self.posteriors(x)[k])
    }

    /// Posterior of every component at `x`, computed in log space. If every
    /// component density is exactly zero the priors are returned.
    pub fn posteriors(&self, x: f64) -> Vec<f64> {
        let logs = self.ln_weighted_densities(x);
        let total = log_sum_exp(&logs);
        if !total.is_finite() {
            return self.components.iter().map(|c| c.weight).collect();
        }
        logs.iter().map(|l| (l - total).exp()).collect()
    }
}
