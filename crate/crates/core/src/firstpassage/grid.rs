//! Frequency lattice for the Fourier inversion and the error-bound driven
//! grid selection.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TcbmError};
use crate::firstpassage::TcbmParams;
use crate::timechange::TimeChangeSpec;

/// Smallest admissible lattice size.
pub const MIN_LATTICE: usize = 1 << 8;
/// Largest admissible lattice size.
pub const MAX_LATTICE: usize = 1 << 14;
/// Default frequency-truncation point.
pub const DEFAULT_UBAR: f64 = 300.0;

/// The frequency lattice `u(k) = -u_bar + k·eta, k = 0..n-1` and its
/// reciprocal lattice `x(l) = l·eta_star` with `eta·eta_star = 2·pi/n`.
///
/// Lattice values of transforms are reliable on the lower half of the
/// reciprocal lattice, `x <= x_max/2`; beyond the midpoint the periodized
/// images dominate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FftGrid {
    n: usize,
    eta: f64,
}

impl FftGrid {
    /// Build a lattice with `n` a power of two in `[2^8, 2^14]` and
    /// spacing `eta > 0`.
    pub fn new(n: usize, eta: f64) -> Result<Self> {
        if !n.is_power_of_two() || !(MIN_LATTICE..=MAX_LATTICE).contains(&n) {
            return Err(TcbmError::domain(format!(
                "lattice size {n} must be a power of two in [{MIN_LATTICE}, {MAX_LATTICE}]"
            )));
        }
        if !(eta > 0.0) {
            return Err(TcbmError::domain(format!("lattice spacing eta = {eta} must be positive")));
        }
        Ok(FftGrid { n, eta })
    }

    /// Lattice sized by truncation point `u_bar` and node count `n`
    /// (`eta = 2·u_bar/n`).
    pub fn with_u_bar(n: usize, u_bar: f64) -> Result<Self> {
        Self::new(n, 2.0 * u_bar / n as f64)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Truncation point `n·eta/2`.
    pub fn u_bar(&self) -> f64 {
        0.5 * self.n as f64 * self.eta
    }

    /// Reciprocal-lattice spacing `2·pi/(n·eta) = pi/u_bar`.
    pub fn eta_star(&self) -> f64 {
        std::f64::consts::TAU / (self.n as f64 * self.eta)
    }

    /// Period of the reciprocal lattice, `n·eta_star`.
    pub fn x_max(&self) -> f64 {
        self.n as f64 * self.eta_star()
    }

    /// Frequency node `u(k) = -u_bar + k·eta`.
    #[inline]
    pub fn u(&self, k: usize) -> f64 {
        -self.u_bar() + k as f64 * self.eta
    }

    /// Reciprocal node `x(l) = l·eta_star`.
    #[inline]
    pub fn x(&self, l: usize) -> f64 {
        l as f64 * self.eta_star()
    }

    /// Number of reliable reciprocal nodes (`l = 0..=n/2`).
    pub fn usable_len(&self) -> usize {
        self.n / 2 + 1
    }

    /// Upper end of the reliable x-range.
    pub fn x_usable(&self) -> f64 {
        0.5 * self.x_max()
    }
}

/// Pick a lattice for the survival transform at horizon `t` and target
/// accuracy `eps`.
///
/// The truncation point starts at the 300 floor and grows until the
/// integrand envelope `exp(-psi(sigma^2 u^2/2, t))/u` falls below `eps`.
/// The node count is the smallest power of two satisfying
/// `n > u_bar/(2·pi·|beta|) · log(eps^{-1}·(1 + exp(-2·beta·x)))`
/// at the reference point `x = params.x`, which controls the
/// discretization (periodization) error. Requires `beta < 0`; for other
/// drifts the bound does not apply and the caller must supply a grid.
pub fn choose_grid(
    spec: &TimeChangeSpec,
    params: &TcbmParams,
    t: f64,
    eps: f64,
) -> Result<FftGrid> {
    if !(eps > 1e-14 && eps < 1e-4) {
        return Err(TcbmError::domain(format!("eps = {eps} outside (1e-14, 1e-4)")));
    }
    if !(params.beta < 0.0) {
        return Err(TcbmError::domain(
            "grid selection requires beta < 0; supply an explicit grid otherwise",
        ));
    }
    if !(t > 0.0) {
        return Err(TcbmError::domain(format!("horizon t = {t} must be positive")));
    }

    let envelope = |u: f64| -> f64 {
        (-spec.psi_unchecked(0.5 * params.sigma * params.sigma * u * u, t)).exp() / u
    };
    let mut u_bar = DEFAULT_UBAR;
    while envelope(u_bar) > eps {
        u_bar *= 1.25;
        if u_bar > 1e5 {
            return Err(TcbmError::numerical(
                "no truncation point below 1e5 meets the target accuracy",
            ));
        }
    }

    let beta = params.beta;
    let bound = u_bar / (std::f64::consts::TAU * beta.abs())
        * ((1.0 / eps) * (1.0 + (-2.0 * beta * params.x).exp())).ln();
    let mut n = MIN_LATTICE;
    while (n as f64) <= bound {
        n *= 2;
        if n > MAX_LATTICE {
            return Err(TcbmError::numerical(format!(
                "discretization bound needs more than {MAX_LATTICE} lattice nodes \
                 (required > {bound:.0})"
            )));
        }
    }
    FftGrid::with_u_bar(n, u_bar)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn default_params() -> TcbmParams {
        TcbmParams::new(0.5, 0.3, -0.5).unwrap()
    }

    #[test]
    fn reciprocal_identity_holds() {
        let grid = FftGrid::with_u_bar(1 << 10, 300.0).unwrap();
        assert_relative_eq!(
            grid.eta_star() * grid.eta(),
            std::f64::consts::TAU / grid.n() as f64,
            epsilon = 1e-15
        );
        assert_relative_eq!(grid.u_bar(), 300.0, epsilon = 1e-12);
        assert_relative_eq!(grid.u(grid.n() / 2), 0.0, epsilon = 1e-12);
        assert_relative_eq!(grid.x_max(), grid.n() as f64 * grid.eta_star(), epsilon = 1e-12);
    }

    #[test]
    fn default_accuracy_keeps_the_truncation_floor() {
        let spec = TimeChangeSpec::vg(0.2, 1.039).unwrap();
        let grid = choose_grid(&spec, &default_params(), 0.25, 1e-10).unwrap();
        assert_relative_eq!(grid.u_bar(), 300.0, epsilon = 1e-9);
    }

    #[test]
    fn lattice_size_follows_discretization_bound() {
        // u_bar/(2 pi |beta|) * ln((1/eps)(1+exp(-2 beta x))) at x = 3,
        // beta = -0.5, eps = 1e-10 sits between 2^11 and 2^12.
        let spec = TimeChangeSpec::vg(0.2, 1.039).unwrap();
        let params = TcbmParams::new(3.0, 0.3, -0.5).unwrap();
        let grid = choose_grid(&spec, &params, 0.25, 1e-10).unwrap();
        let bound = 300.0 / (std::f64::consts::TAU * 0.5)
            * ((1e10_f64) * (1.0 + (3.0_f64).exp())).ln();
        assert!(grid.n() as f64 > bound);
        assert!((grid.n() / 2) as f64 <= bound);
    }

    #[test]
    fn nonnegative_drift_is_rejected() {
        let spec = TimeChangeSpec::brownian();
        let params = TcbmParams::new(0.5, 0.3, 0.0).unwrap();
        assert!(choose_grid(&spec, &params, 1.0, 1e-10).is_err());
    }

    #[test]
    fn invalid_lattices_are_rejected() {
        assert!(FftGrid::new(1000, 0.5).is_err());
        assert!(FftGrid::new(1 << 7, 0.5).is_err());
        assert!(FftGrid::new(1 << 15, 0.5).is_err());
        assert!(FftGrid::new(1 << 10, -1.0).is_err());
    }
}
