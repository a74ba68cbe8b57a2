//! Univariate normal density and distribution function.

use std::f64::consts::{PI, SQRT_2};

/// `ln(sqrt(2 pi))`
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Standard normal CDF, `0.5 * erfc(-x / sqrt 2)`. Using `erfc` keeps full
/// relative precision in the lower tail.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

pub fn normal_pdf(x: f64, mean: f64, std_dev: f64) -> f64 {
    std_normal_pdf((x - mean) / std_dev) / std_dev
}

pub fn normal_ln_pdf(x: f64, mean: f64, std_dev: f64) -> f64 {
    let z = (x - mean) / std_dev;
    -0.5 * z * z - std_dev.ln() - LN_SQRT_2PI
}

pub fn normal_cdf(x: f64, mean: f64, std_dev: f64) -> f64 {
    std_normal_cdf((x - mean) / std_dev)
}

/// `ln(sum(exp(values)))` with max subtraction. Returns `-inf` when every
/// value is `-inf`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}
