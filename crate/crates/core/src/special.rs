//! Standard normal distribution helpers.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// `(2π)^{-1/2}`
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
#[inline]
pub fn phi(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal cumulative distribution function.
#[inline]
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail `1 - Φ(x)` without cancellation.
#[inline]
pub fn sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// `Φ(b) - Φ(a)` evaluated on whichever tail avoids cancellation.
pub fn cdf_diff(a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    if a >= 0.0 {
        sf(a) - sf(b)
    } else if b <= 0.0 {
        cdf(b) - cdf(a)
    } else {
        1.0 - sf(b) - cdf(a)
    }
}

/// Lebesgue volume of the unit ball in dimension `n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => 2.0 * PI / n as f64 * unit_ball_volume(n - 2),
    }
}
