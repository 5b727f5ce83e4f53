//! Standard normal helpers accurate in both tails.

use statrs::function::erf::{erfc, erfc_inv};
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
pub fn pdf(x: f64) -> f64 {
    if x.is_infinite() {
        return 0.0;
    }
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal distribution function.
pub fn cdf(x: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        0.0
    } else if x == f64::INFINITY {
        1.0
    } else {
        0.5 * erfc(-x * FRAC_1_SQRT_2)
    }
}

/// Upper tail `1 - cdf(x)` without cancellation.
pub fn sf(x: f64) -> f64 {
    cdf(-x)
}

/// Standard normal quantile; returns ±∞ at the endpoints.
pub fn quantile(p: f64) -> f64 {
    if p <= 0.0 {
        f64::NEG_INFINITY
    } else if p >= 1.0 {
        f64::INFINITY
    } else {
        -SQRT_2 * erfc_inv(2.0 * p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn quantile_inverts_cdf() {
        for &x in &[-8.0, -3.2, -0.7, 0.0, 0.3, 2.5, 6.0] {
            assert_abs_diff_eq!(quantile(cdf(x)), x, epsilon = 1e-8);
        }
        assert_abs_diff_eq!(quantile(0.75), 0.674_489_750_196_081_7, epsilon = 1e-12);
    }

    #[test]
    fn tails_keep_relative_precision() {
        let p = cdf(-30.0);
        assert!(p > 0.0);
        assert_abs_diff_eq!(quantile(p), -30.0, epsilon = 1e-6);
        assert_eq!(sf(40.0), cdf(-40.0));
    }
}
