use serde::{Deserialize, Serialize};

use super::{check_finite, DensityError};
use crate::normal::{std_normal_cdf, std_normal_pdf};

/// Gaussian kernel density estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelDensity {
    points: Vec<f64>,
    bandwidth: f64,
}

impl KernelDensity {
    pub fn new(points: Vec<f64>, bandwidth: f64) -> Result<Self, DensityError> {
        if points.is_empty() {
            return Err(DensityError::EmptyData);
        }
        check_finite(&points)?;
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(DensityError::InvalidBandwidth(bandwidth));
        }
        Ok(Self { points, bandwidth })
    }

    /// Uses Silverman's rule of thumb for the bandwidth.
    pub fn with_silverman_bandwidth(points: Vec<f64>) -> Result<Self, DensityError> {
        let h = silverman_bandwidth(&points)?;
        Self::new(points, h)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let sum: f64 = self
            .points
            .iter()
            .map(|&p| std_normal_pdf((x - p) / h))
            .sum();
        sum / (self.points.len() as f64 * h)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let sum: f64 = self
            .points
            .iter()
            .map(|&p| std_normal_cdf((x - p) / h))
            .sum();
        (sum / self.points.len() as f64).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StdDevConvention {
    /// `n - 1` denominator.
    Sample,
    /// `n` denominator.
    Population,
}

/// Inputs and result of Silverman's rule, kept for the fit report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthEstimate {
    pub bandwidth: f64,
    pub std_dev: f64,
    pub iqr: f64,
    pub n: usize,
    pub std_dev_convention: StdDevConvention,
}

pub fn sample_std_dev(data: &[f64], convention: StdDevConvention) -> f64 {
    let n = data.len() as f64;
    let mean = data.iter().sum::<f64>() / n;
    let ss: f64 = data.iter().map(|x| (x - mean) * (x - mean)).sum();
    let denom = match convention {
        StdDevConvention::Sample => n - 1.0,
        StdDevConvention::Population => n,
    };
    (ss / denom).sqrt()
}

/// Quantile with linear interpolation between order statistics
/// (`h = (n - 1) p`).
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn iqr(data: &[f64]) -> f64 {
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25)
}

/// `0.9 * min(sd, IQR / 1.34) * n^(-1/5)`. When the IQR is zero but the
/// standard deviation is not, the standard deviation alone is used.
pub fn silverman_estimate(
    data: &[f64],
    convention: StdDevConvention,
) -> Result<BandwidthEstimate, DensityError> {
    check_finite(data)?;
    if data.len() < 2 {
        return Err(DensityError::ConstantData);
    }
    let std_dev = sample_std_dev(data, convention);
    let iqr = iqr(data);
    let spread = if iqr > 0.0 {
        std_dev.min(iqr / 1.34)
    } else {
        std_dev
    };
    if spread <= 0.0 {
        return Err(DensityError::ConstantData);
    }
    Ok(BandwidthEstimate {
        bandwidth: 0.9 * spread * (data.len() as f64).powf(-0.2),
        std_dev,
        iqr,
        n: data.len(),
        std_dev_convention: convention,
    })
}

/// Silverman's rule of thumb with the sample (`n - 1`) standard deviation.
pub fn silverman_bandwidth(data: &[f64]) -> Result<f64, DensityError> {
    silverman_estimate(data, StdDevConvention::Sample).map(|e| e.bandwidth)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_kernel() {
        let k = KernelDensity::new(vec![0.0], 1.0).unwrap();
        assert!((k.pdf(0.0) - 0.398_942_280_401_432_7).abs() < 1e-15);
        assert_eq!(k.cdf(0.0), 0.5);
        assert_eq!(k.cdf(f64::INFINITY), 1.0);
    }

    #[test]
    fn rejects_invalid_models() {
        assert_eq!(KernelDensity::new(vec![], 1.0), Err(DensityError::EmptyData));
        assert_eq!(
            KernelDensity::new(vec![1.0], 0.0),
            Err(DensityError::InvalidBandwidth(0.0))
        );
    }

    #[test]
    fn quantiles_interpolate() {
        let sorted = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&sorted, 0.25), 1.75);
        assert_eq!(quantile_sorted(&sorted, 0.75), 3.25);
        assert_eq!(iqr(&[4.0, 1.0, 3.0, 2.0]), 1.5);
    }

    #[test]
    fn unit_spread_bandwidth() {
        // 100 points, sample sd exactly 1 and a wide IQR: h = 0.9 * 100^-0.2
        let half: Vec<f64> = vec![-1.0; 50];
        let mut data: Vec<f64> = half.iter().copied().chain(vec![1.0; 50]).collect();
        let scale = (99.0f64 / 100.0).sqrt();
        for x in &mut data {
            *x *= scale;
        }
        let est = silverman_estimate(&data, StdDevConvention::Sample).unwrap();
        assert!((est.std_dev - 1.0).abs() < 1e-12);
        assert!(est.iqr / 1.34 > 1.0);
        assert!((est.bandwidth - 0.9 * 100f64.powf(-0.2)).abs() < 1e-12);
        assert!((est.bandwidth - 0.3583).abs() < 1e-4);
    }

    #[test]
    fn constant_data_has_no_bandwidth() {
        assert_eq!(silverman_bandwidth(&[2.0; 10]), Err(DensityError::ConstantData));
        assert_eq!(silverman_bandwidth(&[2.0]), Err(DensityError::ConstantData));
    }

    #[test]
    fn bandwidth_scales_with_data() {
        let data: Vec<f64> = (0..40).map(|i| ((i * 13) % 17) as f64 * 0.37).collect();
        let h = silverman_bandwidth(&data).unwrap();
        let scaled: Vec<f64> = data.iter().map(|x| x * 4.5).collect();
        assert!((silverman_bandwidth(&scaled).unwrap() - 4.5 * h).abs() < 1e-12);
    }
}
