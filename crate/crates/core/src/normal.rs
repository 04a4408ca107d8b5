//! Standard normal distribution helpers built on `erfc`.

use libm::erfc;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Standard normal CDF.
pub fn cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal survival function `1 - cdf(x)`, accurate in the upper tail.
pub fn sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// Standard normal density.
pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// `cdf(a) - cdf(b)`, computed on whichever tail keeps both terms small.
pub fn cdf_diff(a: f64, b: f64) -> f64 {
    if a.min(b) > 0.0 {
        sf(b) - sf(a)
    } else {
        cdf(a) - cdf(b)
    }
}
