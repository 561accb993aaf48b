/// Standard normal CDF, `Φ(x) = erfc(-x / √2) / 2`.
pub fn standard_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}
