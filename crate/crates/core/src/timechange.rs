//! Lévy time changes for subordinated Brownian motion: the gamma (VG) and
//! compound-Poisson-exponential (EXP) clocks, plus the degenerate
//! deterministic clock, together with their Laplace exponents and exact
//! increment simulation.
//!
//! Both stochastic clocks carry a drift `b ∈ (0,1]` and jump-activity `c > 0`
//! with derived jump scale `a = (1-b)/c`, which normalizes the average speed
//! to one: `E[G_t] = (b + c·a)·t = t`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Result, TcbmError};

/// Which Lévy clock drives the Brownian motion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeChangeKind {
    /// Gamma subordinator with drift: infinite-activity jumps.
    Vg,
    /// Compound Poisson subordinator with exponential jumps and drift.
    Exp,
    /// Deterministic clock `G_t = speed·t`.
    Brownian,
}

/// A fully specified time change.
///
/// For `Vg`/`Exp` the fields are the drift `b` and jump activity `c`; the
/// jump scale `a = (1-b)/c` is always derived, never stored. `Brownian`
/// reuses `b` as the deterministic speed (1 for the plain clock; the
/// `c -> 0` limit of either jump model runs at speed `b`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeChangeSpec {
    kind: TimeChangeKind,
    b: f64,
    c: f64,
}

impl TimeChangeSpec {
    /// Gamma-clock (VG) specification.
    pub fn vg(b: f64, c: f64) -> Result<Self> {
        Self::jump_model(TimeChangeKind::Vg, b, c)
    }

    /// Exponential-jump (EXP) specification.
    pub fn exp(b: f64, c: f64) -> Result<Self> {
        Self::jump_model(TimeChangeKind::Exp, b, c)
    }

    fn jump_model(kind: TimeChangeKind, b: f64, c: f64) -> Result<Self> {
        if !(b > 0.0 && b <= 1.0) {
            return Err(TcbmError::domain(format!("time-change drift b = {b} outside (0, 1]")));
        }
        if !(c > 0.0) {
            return Err(TcbmError::domain(format!(
                "jump activity c = {c} must be positive; use a Brownian spec for c = 0"
            )));
        }
        Ok(TimeChangeSpec { kind, b, c })
    }

    /// Unit-speed deterministic clock `G_t = t`.
    pub fn brownian() -> Self {
        TimeChangeSpec { kind: TimeChangeKind::Brownian, b: 1.0, c: 0.0 }
    }

    /// Deterministic clock `G_t = speed·t`. This is the `c -> 0` limit of
    /// the jump clocks with drift `b = speed`.
    pub fn brownian_with_speed(speed: f64) -> Result<Self> {
        if !(speed > 0.0 && speed <= 1.0) {
            return Err(TcbmError::domain(format!("clock speed {speed} outside (0, 1]")));
        }
        Ok(TimeChangeSpec { kind: TimeChangeKind::Brownian, b: speed, c: 0.0 })
    }

    pub fn kind(&self) -> TimeChangeKind {
        self.kind
    }

    /// Drift of the clock (deterministic speed for `Brownian`).
    pub fn b(&self) -> f64 {
        self.b
    }

    /// Jump activity (0 for `Brownian`).
    pub fn c(&self) -> f64 {
        self.c
    }

    /// Derived jump scale `a = (1-b)/c`; 0 for the deterministic clock.
    pub fn a(&self) -> f64 {
        match self.kind {
            TimeChangeKind::Brownian => 0.0,
            _ => (1.0 - self.b) / self.c,
        }
    }

    /// Laplace exponent `psi(u, t) = -log E[exp(-u G_t)]` for `u, t >= 0`.
    ///
    /// VG: `t·[b·u + c·log(1 + a·u)]`; EXP: `t·[b·u + a·c·u/(1 + a·u)]`;
    /// deterministic clock: `t·speed·u`.
    pub fn laplace_exponent(&self, u: f64, t: f64) -> Result<f64> {
        if u < 0.0 {
            return Err(TcbmError::domain(format!("laplace_exponent needs u >= 0, got {u}")));
        }
        if t < 0.0 {
            return Err(TcbmError::domain(format!("laplace_exponent needs t >= 0, got {t}")));
        }
        Ok(self.psi_unchecked(u, t))
    }

    #[inline]
    pub(crate) fn psi_unchecked(&self, u: f64, t: f64) -> f64 {
        match self.kind {
            TimeChangeKind::Vg => t * (self.b * u + self.c * (self.a() * u).ln_1p()),
            TimeChangeKind::Exp => {
                let au = self.a() * u;
                t * (self.b * u + self.c * self.a() * u / (1.0 + au))
            }
            TimeChangeKind::Brownian => t * self.b * u,
        }
    }

    /// Analytic continuation of the Laplace exponent to `Re(u) >= 0`,
    /// using the principal logarithm (no branch crossing in that
    /// half-plane since `Re(1 + a·u) >= 1`).
    pub fn laplace_exponent_complex(&self, u: Complex64, t: f64) -> Result<Complex64> {
        if u.re < 0.0 {
            return Err(TcbmError::domain(format!(
                "laplace_exponent_complex needs Re(u) >= 0, got {}",
                u.re
            )));
        }
        if t < 0.0 {
            return Err(TcbmError::domain(format!("laplace_exponent_complex needs t >= 0, got {t}")));
        }
        let a = self.a();
        let v = match self.kind {
            TimeChangeKind::Vg => self.b * u + self.c * (1.0 + a * u).ln(),
            TimeChangeKind::Exp => self.b * u + a * self.c * u / (1.0 + a * u),
            TimeChangeKind::Brownian => self.b * u,
        };
        Ok(t * v)
    }

    /// One exact draw of the clock increment `G_{t+dt} - G_t`.
    ///
    /// VG adds a `Gamma(c·dt, a)` variate to the drift `b·dt`; EXP adds a
    /// compound Poisson sum of `Exp(mean a)` jumps with rate `c·dt`.
    pub fn sample_increment<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R) -> Result<f64> {
        if !(dt > 0.0) {
            return Err(TcbmError::domain(format!("sample_increment needs dt > 0, got {dt}")));
        }
        let drift = self.b * dt;
        Ok(match self.kind {
            TimeChangeKind::Brownian => drift,
            TimeChangeKind::Vg => {
                let gamma = Gamma::new(self.c * dt, self.a()).expect("valid gamma parameters");
                drift + gamma.sample(rng)
            }
            TimeChangeKind::Exp => {
                let n = Poisson::new(self.c * dt).expect("valid poisson rate").sample(rng) as u64;
                let jump = Exp::new(1.0 / self.a()).expect("valid exponential rate");
                drift + (0..n).map(|_| jump.sample(rng)).sum::<f64>()
            }
        })
    }
}
