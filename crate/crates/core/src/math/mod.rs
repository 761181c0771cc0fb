//! Small numerical utilities: normal distribution helpers, polynomials,
//! Gaussian partial moments, monotone interpolation and quadrature.

pub mod interp;
pub mod quad;
pub mod upchip;

/// Standard normal density.
#[inline]
pub fn norm_pdf(z: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Standard normal CDF, computed through `erfc` so that both tails keep
/// full relative accuracy down to ~1e-300.
#[inline]
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Upper tail of the standard normal, `1 - Phi(z)` without cancellation.
#[inline]
pub fn norm_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

/// Log of the standard normal density.
#[inline]
pub fn norm_logpdf(z: f64) -> f64 {
    const LOG_SQRT_2PI: f64 = 0.918_938_533_204_672_7;
    -0.5 * z * z - LOG_SQRT_2PI
}

/// Log-density of `N(mean, var)` evaluated at `x`.
#[inline]
pub fn gauss_logpdf(x: f64, mean: f64, var: f64) -> f64 {
    let z = x - mean;
    -0.5 * z * z / var - 0.5 * var.ln() - 0.918_938_533_204_672_7
}

/// Hazard-rate function of the standard normal, `phi(a) / (1 - Phi(a))`.
///
/// Used for truncated-normal moments; stable for `a` up to ~30 where the
/// survival function is still representable.
#[inline]
pub fn mills_lambda(a: f64) -> f64 {
    let sf = norm_sf(a);
    if sf > 0.0 {
        norm_pdf(a) / sf
    } else {
        // Asymptotic hazard for extreme truncation.
        a + 1.0 / a
    }
}

/// Partial moments `I_n = ∫_{s0}^∞ s^n phi(s) ds` of the standard normal
/// for n = 0..=max_n, by the recursion `I_n = s0^{n-1} phi(s0) + (n-1) I_{n-2}`.
pub fn gaussian_partial_moments(s0: f64, max_n: usize) -> Vec<f64> {
    let mut out = vec![0.0; max_n + 1];
    let pdf = norm_pdf(s0);
    out[0] = norm_sf(s0);
    if max_n >= 1 {
        out[1] = pdf;
    }
    for n in 2..=max_n {
        out[n] = s0.powi(n as i32 - 1) * pdf + (n as f64 - 1.0) * out[n - 2];
    }
    out
}

/// Full-line moments `∫ s^n phi(s) ds` (0 for odd n, double factorial for even).
pub fn gaussian_full_moments(max_n: usize) -> Vec<f64> {
    let mut out = vec![0.0; max_n + 1];
    out[0] = 1.0;
    for n in (2..=max_n).step_by(2) {
        out[n] = (n as f64 - 1.0) * out[n - 2];
    }
    out
}

/// Coefficient product of two dense polynomials (ascending powers).
pub fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Evaluate a dense polynomial (ascending powers) by Horner's rule.
#[inline]
pub fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Fit the degree `n-1` interpolating polynomial through `n` points,
/// returning coefficients in ascending powers of `x`. Newton divided
/// differences; intended for small n (quartic fits use n = 5).
pub fn poly_interpolate(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    assert_eq!(n, ys.len());
    // Divided-difference table.
    let mut dd = ys.to_vec();
    for level in 1..n {
        for i in (level..n).rev() {
            dd[i] = (dd[i] - dd[i - 1]) / (xs[i] - xs[i - level]);
        }
    }
    // Expand Newton form into monomial coefficients.
    let mut coeffs = vec![0.0; n];
    for i in (0..n).rev() {
        // coeffs = coeffs * (x - xs[i]) + dd[i]
        for j in (1..n).rev() {
            coeffs[j] = coeffs[j - 1] - xs[i] * coeffs[j];
        }
        coeffs[0] = dd[i] - xs[i] * coeffs[0];
    }
    coeffs
}

/// The `n` Chebyshev interpolation nodes on `[lo, hi]`.
pub fn chebyshev_nodes(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    (0..n)
        .map(|j| {
            let theta = (2.0 * j as f64 + 1.0) * std::f64::consts::PI / (2.0 * n as f64);
            mid + half * theta.cos()
        })
        .collect()
}
