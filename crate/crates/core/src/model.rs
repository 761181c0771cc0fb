//! Model wiring shared by the filter, estimation and the CLI: which time
//! change, the frozen nuisance parameters, and the free parameter vector.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TcbmError};
use crate::firstpassage::{FftGrid, TcbmParams};
use crate::timechange::TimeChangeSpec;

/// Model family: the two stochastic clocks and their common degenerate
/// limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Vg,
    Exp,
    /// Deterministic clock at speed `b` (the c -> 0 limit of either jump
    /// model), i.e. a barrier-diffusion model with volatility sigma·sqrt(b).
    BlackCox,
}

impl ModelKind {
    /// Number of free parameters: (c, beta_Q, R, eta) for the jump models,
    /// (beta_Q, R, eta) for the nested diffusion.
    pub fn has_jump_activity(&self) -> bool {
        !matches!(self, ModelKind::BlackCox)
    }
}

impl std::str::FromStr for ModelKind {
    type Err = TcbmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "vg" => Ok(ModelKind::Vg),
            "exp" => Ok(ModelKind::Exp),
            "blackcox" | "black-cox" | "bc" => Ok(ModelKind::BlackCox),
            other => Err(TcbmError::InvalidData(format!("unknown model kind '{other}'"))),
        }
    }
}

/// The three frozen nuisance parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrozenParams {
    /// Brownian volatility (fixed by the rescaling freedom).
    pub sigma: f64,
    /// Physical-measure drift coefficient.
    pub beta: f64,
    /// Time-change drift.
    pub b: f64,
}

impl Default for FrozenParams {
    fn default() -> Self {
        FrozenParams { sigma: 0.3, beta: -0.5, b: 0.2 }
    }
}

/// Free parameters: jump activity, risk-neutral drift, recovery and the
/// measurement error scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theta {
    pub c: f64,
    pub beta_q: f64,
    pub recovery: f64,
    pub eta: f64,
}

impl Theta {
    pub fn as_array(&self) -> [f64; 4] {
        [self.c, self.beta_q, self.recovery, self.eta]
    }

    pub fn from_array(v: [f64; 4]) -> Self {
        Theta { c: v[0], beta_q: v[1], recovery: v[2], eta: v[3] }
    }
}

/// Admissible box for the free parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaBounds {
    pub c: (f64, f64),
    pub beta_q: (f64, f64),
    pub recovery: (f64, f64),
    pub eta: (f64, f64),
}

impl Default for ThetaBounds {
    fn default() -> Self {
        ThetaBounds {
            c: (1e-3, 10.0),
            beta_q: (-5.0, -1e-3),
            recovery: (0.0, 0.95),
            eta: (1e-3, 20.0),
        }
    }
}

impl ThetaBounds {
    pub fn lo(&self) -> [f64; 4] {
        [self.c.0, self.beta_q.0, self.recovery.0, self.eta.0]
    }

    pub fn hi(&self) -> [f64; 4] {
        [self.c.1, self.beta_q.1, self.recovery.1, self.eta.1]
    }

    pub fn contains(&self, theta: &Theta) -> bool {
        let t = theta.as_array();
        let lo = self.lo();
        let hi = self.hi();
        (0..4).all(|i| t[i] >= lo[i] && t[i] <= hi[i])
    }
}

/// Everything fixed during one filter evaluation except the free Theta.
#[derive(Debug, Clone)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub frozen: FrozenParams,
    /// Premium interval of the quoted contracts (years).
    pub premium_dt: f64,
    /// Quoted tenor set (years).
    pub tenors: Vec<f64>,
    /// Pricing lattice.
    pub grid: FftGrid,
    /// Observation interval of the panel (years).
    pub obs_dt: f64,
}

impl ModelConfig {
    /// The paper-default setup: quarterly premiums, the seven standard
    /// tenors, weekly observations and a pricing lattice fine enough for
    /// interpolation-grade spread curves.
    pub fn with_kind(kind: ModelKind) -> Self {
        ModelConfig {
            kind,
            frozen: FrozenParams::default(),
            premium_dt: 0.25,
            tenors: crate::panel::DEFAULT_TENORS.to_vec(),
            grid: FftGrid::with_u_bar(1 << 13, 1200.0).expect("valid default grid"),
            obs_dt: 1.0 / 52.0,
        }
    }

    /// Time change for the given free parameters.
    pub fn spec(&self, theta: &Theta) -> Result<TimeChangeSpec> {
        match self.kind {
            ModelKind::Vg => TimeChangeSpec::vg(self.frozen.b, theta.c),
            ModelKind::Exp => TimeChangeSpec::exp(self.frozen.b, theta.c),
            ModelKind::BlackCox => TimeChangeSpec::brownian_with_speed(self.frozen.b),
        }
    }

    /// Physical-measure dynamics with reference starting point `x`.
    pub fn params_p(&self, x: f64) -> Result<TcbmParams> {
        TcbmParams::new(x, self.frozen.sigma, self.frozen.beta)
    }

    /// Risk-neutral dynamics with reference starting point `x`.
    pub fn params_q(&self, x: f64, theta: &Theta) -> Result<TcbmParams> {
        TcbmParams::new(x, self.frozen.sigma, theta.beta_q)
    }

    pub fn max_tenor(&self) -> f64 {
        self.tenors.iter().cloned().fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn black_cox_is_the_slow_deterministic_clock() {
        let config = ModelConfig::with_kind(ModelKind::BlackCox);
        let theta = Theta { c: 0.0, beta_q: -1.5, recovery: 0.6, eta: 1.5 };
        let spec = config.spec(&theta).unwrap();
        // psi(u, t) = b t u with b = 0.2
        assert_eq!(spec.laplace_exponent(1.0, 1.0).unwrap(), 0.2);
    }

    #[test]
    fn model_kind_parses() {
        assert_eq!("vg".parse::<ModelKind>().unwrap(), ModelKind::Vg);
        assert_eq!("blackcox".parse::<ModelKind>().unwrap(), ModelKind::BlackCox);
        assert!("garch".parse::<ModelKind>().is_err());
    }

    #[test]
    fn default_bounds_contain_paper_scale_estimates() {
        let bounds = ThetaBounds::default();
        let theta = Theta { c: 1.039, beta_q: -1.50, recovery: 0.626, eta: 1.53 };
        assert!(bounds.contains(&theta));
    }
}
