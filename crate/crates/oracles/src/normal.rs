//! Standard normal CDF and quantile by plain bisection.

use statrs::function::erf::erfc;

pub fn cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Φ⁻¹(u) by bisection on [-40, 40] until the bracket is below `tol`.
pub fn quantile(u: f64, tol: f64) -> f64 {
    assert!(u > 0.0 && u < 1.0);
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
