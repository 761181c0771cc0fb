//! First-passage machinery for time-changed Brownian motion: survival
//! probabilities of the stopped log-leverage process, the transition
//! density conditioned on survival, and its first two moments. Everything
//! is driven by Fourier inversion on a fixed frequency lattice so that one
//! FFT yields a whole curve in the starting point `x`.

pub(crate) mod grid;
pub(crate) mod survival;
mod transition;

pub use grid::{choose_grid, FftGrid, DEFAULT_UBAR, MAX_LATTICE, MIN_LATTICE};
pub use survival::{survival_at, survival_lattice, survival_point, SurvivalCurve};
pub use transition::{
    conditional_density, conditional_moments, ConditionalDensity, MomentEngine,
    TransitionKernel,
};

use serde::{Deserialize, Serialize};

use crate::error::{Result, TcbmError};

/// Log-leverage dynamics of the firm under one probability measure:
/// `X_t = x + sigma·W_{G_t} + beta·sigma^2·G_t` with default barrier at 0.
///
/// `beta` is the physical drift coefficient or its risk-neutral
/// counterpart, depending on which measure the instance represents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TcbmParams {
    /// Reference starting log-leverage (>= 0).
    pub x: f64,
    /// Brownian volatility (> 0).
    pub sigma: f64,
    /// Drift coefficient: the drift of X is `beta·sigma^2` per unit of
    /// operational time.
    pub beta: f64,
}

impl TcbmParams {
    pub fn new(x: f64, sigma: f64, beta: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(TcbmError::domain(format!("sigma = {sigma} must be positive")));
        }
        if !(x >= 0.0) {
            return Err(TcbmError::domain(format!("x = {x} must be nonnegative")));
        }
        Ok(TcbmParams { x, sigma, beta })
    }

    /// Same dynamics with a different starting point.
    pub fn with_x(&self, x: f64) -> Result<Self> {
        Self::new(x, self.sigma, self.beta)
    }

    /// The joint rescaling `(x, sigma, beta) -> (l·x, l·sigma, beta/l)`
    /// that leaves all survival probabilities unchanged.
    pub fn rescaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(TcbmError::domain(format!("lambda = {lambda} must be positive")));
        }
        Self::new(self.x * lambda, self.sigma * lambda, self.beta / lambda)
    }
}
