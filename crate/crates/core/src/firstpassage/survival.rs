//! Survival probability of the stopped process: lattice evaluation by FFT,
//! single-point evaluation by direct lattice quadrature, and monotone
//! interpolation in the starting point.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Result, TcbmError};
use crate::firstpassage::{FftGrid, TcbmParams};
use crate::math::upchip::UniformPchip;
use crate::timechange::TimeChangeSpec;

/// Hard error threshold on the imaginary residue of the transform.
const RESIDUE_ERROR: f64 = 1e-6;
/// Clamp band around [0, 1]; values farther out signal a mis-sized grid.
const CLAMP_BAND: f64 = 1e-8;

/// Survival probabilities on the reliable half of the reciprocal lattice,
/// with a monotone interpolant for off-lattice starting points.
#[derive(Debug, Clone)]
pub struct SurvivalCurve {
    t: f64,
    grid: FftGrid,
    interp: UniformPchip,
}

impl SurvivalCurve {
    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn grid(&self) -> &FftGrid {
        &self.grid
    }

    /// Lattice values for `x(l), l = 0..=n/2`.
    pub fn values(&self) -> &[f64] {
        self.interp.values()
    }

    /// Value at lattice node `l`.
    pub fn at_node(&self, l: usize) -> f64 {
        self.interp.values()[l]
    }

    /// Survival at an arbitrary starting point in `[0, x_max/2]`:
    /// monotone cubic interpolation, exact at lattice nodes.
    pub fn at(&self, x: f64) -> Result<f64> {
        if !(0.0..=self.grid.x_usable() + 1e-12).contains(&x) {
            return Err(TcbmError::OutOfRange {
                what: "survival starting point",
                value: x,
                lo: 0.0,
                hi: self.grid.x_usable(),
            });
        }
        Ok(self.interp.value(x)?.clamp(0.0, 1.0))
    }
}

/// `exp(-psi(sigma^2 (u_k^2 + beta^2)/2, t))` over the frequency lattice.
pub(crate) fn psi_factors(
    spec: &TimeChangeSpec,
    params: &TcbmParams,
    t: f64,
    grid: &FftGrid,
) -> Vec<f64> {
    let half_s2 = 0.5 * params.sigma * params.sigma;
    let b2 = params.beta * params.beta;
    (0..grid.n())
        .map(|k| {
            let u = grid.u(k);
            (-spec.psi_unchecked(half_s2 * (u * u + b2), t)).exp()
        })
        .collect()
}

/// Geometric-series correction for the periodized images of the sine
/// transform. The transform behaves like `pi·exp(-|beta|·y)` far from the
/// barrier, so the wrapped-around images can be added back analytically;
/// the residual is suppressed by the default probability at the reflected
/// point. Returns the additive correction to the survival value at `x`.
#[inline]
pub(crate) fn image_correction(beta: f64, x_max: f64, x: f64) -> f64 {
    if beta == 0.0 {
        return 0.0;
    }
    let ab = beta.abs();
    let q = (-ab * x_max).exp();
    (-beta * x).exp() * ((ab * x).exp() - (-ab * x).exp()) * q / (1.0 - q)
}

/// Indicator term `(1 - exp(-2 beta x))·1{beta > 0}` of the survival formula.
#[inline]
fn drift_indicator(beta: f64, x: f64) -> f64 {
    if beta > 0.0 {
        1.0 - (-2.0 * beta * x).exp()
    } else {
        0.0
    }
}

/// Survival probabilities `P(t, x(l))` for every reliable lattice node via
/// one length-n FFT of `u/(u^2+beta^2)·exp(-psi(...))`.
pub fn survival_lattice(
    spec: &TimeChangeSpec,
    params: &TcbmParams,
    t: f64,
    grid: &FftGrid,
) -> Result<SurvivalCurve> {
    let planner = FftPlanner::new().plan_fft_inverse(grid.n());
    survival_lattice_with(spec, params, t, grid, planner.as_ref())
}

/// Same as [`survival_lattice`] but reusing a prepared FFT plan, for
/// callers that evaluate many horizons on one grid.
pub(crate) fn survival_lattice_with(
    spec: &TimeChangeSpec,
    params: &TcbmParams,
    t: f64,
    grid: &FftGrid,
    fft: &dyn Fft<f64>,
) -> Result<SurvivalCurve> {
    if !(t > 0.0) {
        return Err(TcbmError::domain(format!("horizon t = {t} must be positive")));
    }
    let n = grid.n();
    let beta = params.beta;
    let eta = grid.eta();
    let factors = psi_factors(spec, params, t, grid);

    let mut buf: Vec<Complex64> = (0..n)
        .map(|k| {
            let u = grid.u(k);
            let denom = u * u + beta * beta;
            let g = if denom == 0.0 { 0.0 } else { u / denom * factors[k] };
            Complex64::new(g, 0.0)
        })
        .collect();
    fft.process(&mut buf);

    let scale = eta / std::f64::consts::PI;
    let pole_term = if beta == 0.0 { scale } else { 0.0 };
    let mut values = Vec::with_capacity(grid.usable_len());
    // Imaginary residue of the lattice transform itself, before the
    // exp(-beta x) prefactor (which amplifies pure roundoff).
    let mut residue: f64 = 0.0;
    for l in 0..grid.usable_len() {
        let x = grid.x(l);
        let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
        let damp = (-beta * x).exp();
        let raw = scale * damp * sign * buf[l].im + pole_term * x;
        residue = residue.max((scale * buf[l].re).abs());
        let p = raw + image_correction(beta, grid.x_max(), x) + drift_indicator(beta, x);
        values.push(p);
    }
    if residue > RESIDUE_ERROR {
        return Err(TcbmError::numerical(format!(
            "imaginary residue {residue:.3e} of the survival transform exceeds {RESIDUE_ERROR:.0e}; \
             the lattice is mis-sized"
        )));
    }
    clamp_checked(&mut values, beta, grid)?;

    let interp = UniformPchip::new(0.0, grid.eta_star(), values)?;
    Ok(SurvivalCurve { t, grid: *grid, interp })
}

fn clamp_checked(values: &mut [f64], beta: f64, grid: &FftGrid) -> Result<()> {
    for (l, v) in values.iter_mut().enumerate() {
        // The exp(-beta x) prefactor amplifies FFT roundoff; an excursion
        // within that envelope implies the true value sits within the
        // same envelope of the clamp, so it is clamped silently. Anything
        // beyond signals a mis-sized lattice.
        let allowance = CLAMP_BAND + 1e-13 * (beta.abs() * grid.x(l)).exp();
        if *v < -allowance || *v > 1.0 + allowance {
            return Err(TcbmError::numerical(format!(
                "survival value {v:.6e} outside the clamp band at node {l}; \
                 the lattice is mis-sized"
            )));
        }
        *v = v.clamp(0.0, 1.0);
    }
    Ok(())
}

/// Survival at one off-lattice point via [`survival_lattice`] +
/// interpolation. Convenience wrapper; batch callers should keep the
/// curve.
pub fn survival_at(
    spec: &TimeChangeSpec,
    params: &TcbmParams,
    t: f64,
    x: f64,
    grid: &FftGrid,
) -> Result<f64> {
    survival_lattice(spec, params, t, grid)?.at(x)
}

/// Survival at a single starting point by direct summation of the
/// frequency lattice (no FFT, no interpolation). Shares the lattice
/// discretization and image correction with [`survival_lattice`], so the
/// two agree to roundoff at lattice nodes.
pub fn survival_point(
    spec: &TimeChangeSpec,
    params: &TcbmParams,
    t: f64,
    x: f64,
    grid: &FftGrid,
) -> Result<f64> {
    if !(t > 0.0) {
        return Err(TcbmError::domain(format!("horizon t = {t} must be positive")));
    }
    if !(x >= 0.0) {
        return Err(TcbmError::domain(format!("starting point x = {x} must be nonnegative")));
    }
    let beta = params.beta;
    let factors = psi_factors(spec, params, t, grid);
    let sum = sine_lattice_sum(grid, x, |k, u| {
        let denom = u * u + beta * beta;
        if denom == 0.0 {
            0.0
        } else {
            u / denom * factors[k]
        }
    });
    let scale = grid.eta() / std::f64::consts::PI;
    let pole_term = if beta == 0.0 { scale * x } else { 0.0 };
    let raw = (-beta * x).exp() * scale * sum + pole_term;
    let p = raw + image_correction(beta, grid.x_max(), x) + drift_indicator(beta, x);
    Ok(p.clamp(0.0, 1.0))
}

/// `sum_k w(k, u_k)·sin(u_k·x)` over the frequency lattice, using a
/// rotation recurrence for the sines (re-synchronized periodically to keep
/// roundoff growth negligible).
pub(crate) fn sine_lattice_sum<W: FnMut(usize, f64) -> f64>(
    grid: &FftGrid,
    x: f64,
    mut weight: W,
) -> f64 {
    let n = grid.n();
    let eta = grid.eta();
    let (sin_step, cos_step) = (eta * x).sin_cos();
    let mut sum = 0.0;
    let mut s = 0.0;
    let mut c = 0.0;
    for k in 0..n {
        if k % 512 == 0 {
            let theta = grid.u(k) * x;
            let (sk, ck) = theta.sin_cos();
            s = sk;
            c = ck;
        }
        sum += weight(k, grid.u(k)) * s;
        let s_next = s * cos_step + c * sin_step;
        c = c * cos_step - s * sin_step;
        s = s_next;
    }
    sum
}


/// Convenience: plan an inverse FFT once for repeat lattice evaluations.
pub(crate) fn plan_inverse(n: usize) -> Arc<dyn Fft<f64>> {
    FftPlanner::new().plan_fft_inverse(n)
}
