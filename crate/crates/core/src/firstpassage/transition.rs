//! Transition density of the log-leverage process conditioned on survival,
//! and its first two moments, both obtained from the same frequency
//! lattice as the survival transform.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Result, TcbmError};
use crate::firstpassage::survival::{psi_factors, survival_point};
use crate::firstpassage::{FftGrid, TcbmParams};
use crate::timechange::TimeChangeSpec;

/// Smallest survival probability for which conditioning is attempted.
const MIN_SURVIVAL: f64 = 1e-12;
/// Normalization deviation that raises an error (grid too small).
const NORMALIZATION_ERROR: f64 = 1e-4;

/// Density of the process at horizon `t` conditioned on no default,
/// tabulated on the reciprocal lattice.
#[derive(Debug, Clone)]
pub struct ConditionalDensity {
    grid: FftGrid,
    values: Vec<f64>,
    normalization: f64,
}

impl ConditionalDensity {
    /// Density values at `y(l) = l·eta_star`, `l = 0..n-1`; zero for y <= 0.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grid(&self) -> &FftGrid {
        &self.grid
    }

    /// Trapezoid integral of the tabulated density (should be 1).
    pub fn normalization(&self) -> f64 {
        self.normalization
    }
}

/// Shared transform for one `(spec, params, t, grid)`: the symmetric
/// kernel `hhat(w) = ∫ exp(-psi(sigma^2(u^2+beta^2)/2, t)) e^{iuw} du`
/// tabulated over the reciprocal lattice. Rows of the transition density
/// for any starting point come from two lookups per endpoint, so one FFT
/// serves every starting point at this horizon.
#[derive(Debug, Clone)]
pub struct TransitionKernel {
    spec: TimeChangeSpec,
    params: TcbmParams,
    t: f64,
    grid: FftGrid,
    hhat: Vec<f64>,
}

impl TransitionKernel {
    pub fn new(
        spec: &TimeChangeSpec,
        params: &TcbmParams,
        t: f64,
        grid: &FftGrid,
    ) -> Result<Self> {
        if !(t > 0.0) {
            return Err(TcbmError::domain(format!("horizon t = {t} must be positive")));
        }
        let n = grid.n();
        let factors = psi_factors(spec, params, t, grid);
        let mut buf: Vec<Complex64> =
            factors.iter().map(|&f| Complex64::new(f, 0.0)).collect();
        FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
        let eta = grid.eta();
        let hhat: Vec<f64> = (0..n)
            .map(|l| {
                let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
                eta * sign * buf[l].re
            })
            .collect();
        Ok(TransitionKernel { spec: *spec, params: *params, t, grid: *grid, hhat })
    }

    pub fn grid(&self) -> &FftGrid {
        &self.grid
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// `hhat` at `|w|`, by 4-point (Catmull-Rom) interpolation for
    /// off-lattice arguments; the kernel is even and periodic on the
    /// lattice, so indices wrap.
    fn hhat_at(&self, w: f64) -> f64 {
        let n = self.grid.n();
        let h = self.grid.eta_star();
        let pos = (w.abs() / h).rem_euclid(n as f64);
        let i = pos.floor() as usize % n;
        let t = pos - pos.floor();
        if t == 0.0 {
            return self.hhat[i];
        }
        let idx = |j: isize| -> f64 {
            let k = (i as isize + j).rem_euclid(n as isize) as usize;
            self.hhat[k]
        };
        let (p0, p1, p2, p3) = (idx(-1), idx(0), idx(1), idx(2));
        // Catmull-Rom cubic through the four neighbouring nodes.
        0.5 * ((2.0 * p1)
            + (-p0 + p2) * t
            + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t * t
            + (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * t * t * t)
    }

    /// Joint density of surviving to `t` AND landing at `y`, started from
    /// `x`: `exp(beta(y-x))·[hhat(y-x) - hhat(y+x)]/(2 pi)` for y > 0.
    /// Integrating over y > 0 recovers the survival probability, so no
    /// division by the survival probability is involved. Zero beyond the
    /// reliable half of the reciprocal lattice, where the periodized
    /// kernel wraps around.
    pub fn joint_density(&self, x: f64, y: f64) -> f64 {
        if y <= 0.0 || x < 0.0 || y > self.grid.x_usable() {
            return 0.0;
        }
        let beta = self.params.beta;
        let v = (beta * (y - x)).exp() * (self.hhat_at(y - x) - self.hhat_at(y + x))
            / std::f64::consts::TAU;
        v.max(0.0)
    }

    /// Row of the joint density over the whole y-lattice.
    pub fn joint_density_row(&self, x: f64) -> Vec<f64> {
        (0..self.grid.n()).map(|l| self.joint_density(x, self.grid.x(l))).collect()
    }

    /// Survival probability from `x`, by direct lattice quadrature.
    pub fn survival(&self, x: f64) -> Result<f64> {
        survival_point(&self.spec, &self.params, self.t, x, &self.grid)
    }

    /// Transition density conditioned on survival, tabulated over the
    /// y-lattice, with its trapezoid normalization checked.
    pub fn conditional_density(&self, x: f64) -> Result<ConditionalDensity> {
        if !(x >= 0.0) {
            return Err(TcbmError::domain(format!("starting point x = {x} must be nonnegative")));
        }
        let p = self.survival(x)?;
        if p <= MIN_SURVIVAL {
            return Err(TcbmError::domain(format!(
                "survival probability {p:.3e} too small to condition on"
            )));
        }
        let mut values = self.joint_density_row(x);
        for v in values.iter_mut() {
            *v /= p;
        }
        let h = self.grid.eta_star();
        let trapz: f64 = h
            * (0.5 * (values[0] + values[self.grid.n() - 1])
                + values[1..self.grid.n() - 1].iter().sum::<f64>());
        if (trapz - 1.0).abs() > NORMALIZATION_ERROR {
            return Err(TcbmError::numerical(format!(
                "conditional density normalizes to {trapz:.8} (deviation above \
                 {NORMALIZATION_ERROR:.0e}); the lattice is too small"
            )));
        }
        Ok(ConditionalDensity { grid: self.grid, values, normalization: trapz })
    }
}

/// One-shot conditional transition density; batch callers should build a
/// [`TransitionKernel`] and reuse it across starting points.
pub fn conditional_density(
    spec: &TimeChangeSpec,
    params: &TcbmParams,
    t: f64,
    x: f64,
    grid: &FftGrid,
) -> Result<ConditionalDensity> {
    TransitionKernel::new(spec, params, t, grid)?.conditional_density(x)
}

/// Precomputed quadrature weights for the conditional-moment sums at one
/// horizon.
///
/// The spatial transforms behind the moment integrals have tails growing
/// like `y^m·exp(-|beta| y)`, so their periodized images die off much more
/// slowly than the survival transform's. The engine therefore carries its
/// own frequency lattice, wide enough in the reciprocal domain that the
/// images are negligible, independent of whatever grid the caller prices
/// on.
#[derive(Debug, Clone)]
pub struct MomentEngine {
    grid: FftGrid,
    eta_over_pi: f64,
    beta: f64,
    /// Per-node weights: survival numerator, first and second
    /// k-derivative factors at k = 0.
    w_p: Vec<f64>,
    w_m1: Vec<f64>,
    w_m2: Vec<f64>,
}

impl MomentEngine {
    /// Build the engine for horizon `dt`. `x_hi` is the largest starting
    /// point that will be queried (sizes the reciprocal range).
    pub fn new(
        spec: &TimeChangeSpec,
        params: &TcbmParams,
        dt: f64,
        x_hi: f64,
    ) -> Result<Self> {
        if !(params.beta < 0.0) {
            return Err(TcbmError::domain(
                "conditional moments are implemented for beta < 0 only",
            ));
        }
        if !(dt > 0.0) {
            return Err(TcbmError::domain(format!("horizon dt = {dt} must be positive")));
        }
        let grid = Self::moment_grid(spec, params, dt, x_hi)?;
        let beta = params.beta;
        let b2 = beta * beta;
        let factors = psi_factors(spec, params, dt, &grid);
        let mut w_p = Vec::with_capacity(grid.n());
        let mut w_m1 = Vec::with_capacity(grid.n());
        let mut w_m2 = Vec::with_capacity(grid.n());
        for k in 0..grid.n() {
            let u = grid.u(k);
            let d = u * u + b2;
            let d2 = d * d;
            let e = factors[k] * u;
            w_p.push(e / d);
            w_m1.push(e * (-2.0 * beta) / d2);
            w_m2.push(e * (2.0 / d2 - 8.0 * b2 / (d2 * d)));
        }
        Ok(MomentEngine {
            grid,
            eta_over_pi: grid.eta() / std::f64::consts::PI,
            beta,
            w_p,
            w_m1,
            w_m2,
        })
    }

    /// Internal lattice: the truncation point grows from the 300 floor
    /// until the integrand envelope at the horizon is negligible (short
    /// horizons decay slowly in u), and the reciprocal range is wide
    /// enough that the polynomially amplified images stay below the
    /// moment tolerances.
    pub(crate) fn moment_grid(
        spec: &TimeChangeSpec,
        params: &TcbmParams,
        dt: f64,
        x_hi: f64,
    ) -> Result<FftGrid> {
        let half_s2 = 0.5 * params.sigma * params.sigma;
        let mut u_bar = crate::firstpassage::grid::DEFAULT_UBAR;
        while (-spec.psi_unchecked(half_s2 * u_bar * u_bar, dt)).exp() / u_bar > 1e-9 {
            u_bar *= 1.25;
            if u_bar > 1e5 {
                return Err(TcbmError::numerical(
                    "no truncation point below 1e5 controls the moment integrand",
                ));
            }
        }
        let margin = (25.0 + 3.0 * (2.0 + x_hi).ln()) / params.beta.abs();
        let x_span = x_hi + margin;
        let mut n = crate::firstpassage::grid::MIN_LATTICE;
        while (n as f64) * std::f64::consts::PI / u_bar < x_span {
            n *= 2;
            if n > crate::firstpassage::grid::MAX_LATTICE {
                return Err(TcbmError::domain(format!(
                    "starting point {x_hi} too large for the moment lattice at horizon {dt}"
                )));
            }
        }
        FftGrid::with_u_bar(n, u_bar)
    }

    pub fn grid(&self) -> &FftGrid {
        &self.grid
    }

    /// Survival probability from the same quadrature as the moments.
    pub fn survival(&self, x: f64) -> Result<f64> {
        let (s_p, _, _) = self.sums(x)?;
        Ok((self.eta_over_pi * (-self.beta * x).exp() * s_p).clamp(0.0, 1.0))
    }

    /// `(g1, g2)`: first two conditional moments from starting point `x`.
    pub fn moments(&self, x: f64) -> Result<(f64, f64)> {
        let (s_p, s_m1, s_m2) = self.sums(x)?;
        let p_rel = self.eta_over_pi * (-self.beta * x).exp() * s_p;
        if p_rel <= MIN_SURVIVAL {
            return Err(TcbmError::domain(format!(
                "survival probability {p_rel:.3e} too small to condition on"
            )));
        }
        let g1 = s_m1 / s_p;
        let g2 = -(s_m2 / s_p);
        if g2 - g1 * g1 <= 0.0 {
            return Err(TcbmError::numerical(format!(
                "conditional variance nonpositive (g1 = {g1}, g2 = {g2})"
            )));
        }
        Ok((g1, g2))
    }

    fn sums(&self, x: f64) -> Result<(f64, f64, f64)> {
        if !(x >= 0.0) {
            return Err(TcbmError::domain(format!("starting point x = {x} must be nonnegative")));
        }
        let n = self.grid.n();
        let eta = self.grid.eta();
        let (sin_step, cos_step) = (eta * x).sin_cos();
        let (mut s_p, mut s_m1, mut s_m2) = (0.0, 0.0, 0.0);
        let mut s = 0.0;
        let mut c = 0.0;
        for k in 0..n {
            if k % 512 == 0 {
                let (sk, ck) = (self.grid.u(k) * x).sin_cos();
                s = sk;
                c = ck;
            }
            s_p += self.w_p[k] * s;
            s_m1 += self.w_m1[k] * s;
            s_m2 += self.w_m2[k] * s;
            let s_next = s * cos_step + c * sin_step;
            c = c * cos_step - s * sin_step;
            s = s_next;
        }
        Ok((s_p, s_m1, s_m2))
    }
}

/// First two moments `(g1, g2)` of the horizon-`dt` transition conditioned
/// on survival, from analytic k-derivatives of the conditional
/// characteristic function at k = 0, evaluated by direct quadrature over
/// the frequency lattice (no FFT involved for a single starting point).
/// Requires `beta < 0` (no boundary terms). Batch callers should keep a
/// [`MomentEngine`].
pub fn conditional_moments(
    spec: &TimeChangeSpec,
    params: &TcbmParams,
    dt: f64,
    x: f64,
) -> Result<(f64, f64)> {
    MomentEngine::new(spec, params, dt, x)?.moments(x)
}
