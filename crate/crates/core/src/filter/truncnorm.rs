//! Truncated-normal moment matching and analytic polynomial-Gaussian
//! integrals, the workhorses of the predictive step.

use crate::error::{Result, TcbmError};
use crate::math::{
    gaussian_full_moments, gaussian_partial_moments, mills_lambda, norm_cdf, norm_sf,
};

/// First two moments of a normal `N(mu, sigma^2)` truncated to `x > 0`:
/// `m1 = mu + sigma·lambda(alpha)`, `m2 = sigma^2·(1 - delta(alpha)) + m1^2`
/// with `alpha = -mu/sigma`.
pub fn truncated_moments(mu: f64, sigma: f64) -> (f64, f64) {
    let alpha = -mu / sigma;
    let lambda = mills_lambda(alpha);
    let delta = lambda * (lambda - alpha);
    let m1 = mu + sigma * lambda;
    let m2 = sigma * sigma * (1.0 - delta) + m1 * m1;
    (m1, m2)
}

/// Invert [`truncated_moments`]: find `(mu, sigma)` of the truncated
/// normal with the given mean `m1 > 0` and second moment `m2`.
///
/// The variance ratio `(m2 - m1^2)/m1^2` is strictly increasing in
/// `alpha = -mu/sigma`, from 0 (no truncation mass) towards 1 (the
/// exponential tail limit), so a bracketed Newton/bisection search on
/// `alpha` converges globally.
pub fn match_truncated_moments(m1: f64, m2: f64) -> Result<(f64, f64)> {
    if !(m1 > 0.0) {
        return Err(TcbmError::numerical(format!(
            "truncated-normal mean {m1} must be positive"
        )));
    }
    let var = m2 - m1 * m1;
    if !(var > 0.0) {
        return Err(TcbmError::numerical(format!(
            "moment pair gives nonpositive variance {var}"
        )));
    }
    let target = var / (m1 * m1);
    if target >= 1.0 {
        return Err(TcbmError::NoConvergence(format!(
            "coefficient of variation^2 = {target:.6} >= 1 cannot come from a truncated normal"
        )));
    }

    let ratio = |alpha: f64| -> f64 {
        let lambda = mills_lambda(alpha);
        let delta = lambda * (lambda - alpha);
        (1.0 - delta) / (lambda - alpha).powi(2)
    };

    // Bracket in alpha: ratio(-40) ~ 1/1600, ratio(+40) ~ 1.
    let (mut lo, mut hi) = (-40.0, 40.0);
    if target <= ratio(lo) {
        // Essentially untruncated.
        let sigma = var.sqrt();
        return Ok((m1, sigma));
    }
    let mut alpha = 0.0;
    for _ in 0..200 {
        let r = ratio(alpha);
        if (r - target).abs() < 1e-14 {
            break;
        }
        if r < target {
            lo = alpha;
        } else {
            hi = alpha;
        }
        // Secant-flavoured bisection: plain midpoint is robust and the
        // iteration count is bounded anyway.
        alpha = 0.5 * (lo + hi);
        if hi - lo < 1e-15 * (1.0 + alpha.abs()) {
            break;
        }
    }
    let lambda = mills_lambda(alpha);
    let sigma = m1 / (lambda - alpha);
    let mu = -alpha * sigma;
    Ok((mu, sigma))
}

/// `∫ poly(x)·N(x; m, v) dx` over `(0, ∞)` (`truncated = true`) or the
/// whole line, with the polynomial given in powers of `(x - center)`.
///
/// Expands around the Gaussian mean and uses the partial moments of the
/// standard normal, so the result is closed-form in the error function.
pub fn poly_gauss_integral(coeffs: &[f64], center: f64, m: f64, v: f64, truncated: bool) -> f64 {
    let sd = v.sqrt();
    // Re-center: x - center = (m - center) + sd·s.
    let shift = m - center;
    let deg = coeffs.len() - 1;
    let moments = if truncated {
        gaussian_partial_moments(-m / sd, deg)
    } else {
        gaussian_full_moments(deg)
    };
    // (shift + sd·s)^n expanded binomially.
    let mut total = 0.0;
    for (n, &c_n) in coeffs.iter().enumerate() {
        if c_n == 0.0 {
            continue;
        }
        let mut binom = 1.0;
        let mut term = 0.0;
        for j in 0..=n {
            // binom = C(n, j)
            term += binom * shift.powi((n - j) as i32) * sd.powi(j as i32) * moments[j];
            binom *= (n - j) as f64 / (j + 1) as f64;
        }
        total += c_n * term;
    }
    total
}

/// Gaussian mass on the integration region: `Phi(m/sd)` when truncated
/// to `x > 0`, 1 on the whole line.
pub fn gauss_mass(m: f64, v: f64, truncated: bool) -> f64 {
    if truncated {
        norm_cdf(m / v.sqrt())
    } else {
        1.0
    }
}

/// Upper-tail mass `P(N(m, v) <= 0)`, used for diagnostics.
pub fn barrier_mass(m: f64, v: f64) -> f64 {
    norm_sf(m / v.sqrt())
}
