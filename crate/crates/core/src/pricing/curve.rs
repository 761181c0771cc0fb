//! Dated zero-coupon discount curve built from continuously-compounded
//! zero yields, linearly interpolated in maturity.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TcbmError};

/// Longest supported discounting horizon in years.
const MAX_HORIZON: f64 = 30.0;

/// Term structure of continuously-compounded zero yields on one date.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroCurve {
    asof: NaiveDate,
    /// (maturity in years, zero yield as a decimal), strictly increasing
    /// maturities starting at or below one month.
    pillars: Vec<(f64, f64)>,
}

impl ZeroCurve {
    pub fn new(asof: NaiveDate, pillars: Vec<(f64, f64)>) -> Result<Self> {
        if pillars.len() < 2 {
            return Err(TcbmError::InvalidData("zero curve needs at least two pillars".into()));
        }
        if pillars.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(TcbmError::InvalidData("pillar maturities must strictly increase".into()));
        }
        if pillars[0].0 > 1.0 / 12.0 + 1e-9 {
            return Err(TcbmError::InvalidData(
                "first pillar must be at or below one month".into(),
            ));
        }
        if pillars.iter().any(|&(m, _)| m <= 0.0) {
            return Err(TcbmError::InvalidData("pillar maturities must be positive".into()));
        }
        Ok(ZeroCurve { asof, pillars })
    }

    /// Flat curve at `rate` over the standard treasury maturities.
    pub fn flat(asof: NaiveDate, rate: f64) -> Self {
        let maturities = [1.0 / 12.0, 0.25, 0.5, 1.0, 2.0, 3.0, 5.0, 7.0, 10.0, 20.0, 30.0];
        ZeroCurve { asof, pillars: maturities.iter().map(|&m| (m, rate)).collect() }
    }

    pub fn asof(&self) -> NaiveDate {
        self.asof
    }

    pub fn pillars(&self) -> &[(f64, f64)] {
        &self.pillars
    }

    /// Zero yield at maturity `t`: linear interpolation between pillars,
    /// flat extrapolation beyond the ends.
    pub fn zero_yield(&self, t: f64) -> f64 {
        let p = &self.pillars;
        if t <= p[0].0 {
            return p[0].1;
        }
        if t >= p[p.len() - 1].0 {
            return p[p.len() - 1].1;
        }
        let idx = p.partition_point(|&(m, _)| m < t);
        let (m0, z0) = p[idx - 1];
        let (m1, z1) = p[idx];
        z0 + (t - m0) / (m1 - m0) * (z1 - z0)
    }

    /// Discount factor `B(t) = exp(-z(t)·t)` for `0 <= t <= 30`.
    pub fn discount(&self, t: f64) -> Result<f64> {
        if !(0.0..=MAX_HORIZON).contains(&t) {
            return Err(TcbmError::OutOfRange {
                what: "discount horizon",
                value: t,
                lo: 0.0,
                hi: MAX_HORIZON,
            });
        }
        if t == 0.0 {
            return Ok(1.0);
        }
        Ok((-self.zero_yield(t) * t).exp())
    }
}
