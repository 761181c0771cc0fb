//! Shape-preserving cubic interpolation on a uniform grid with tangents
//! computed on the fly (no precomputed arrays): the evaluation-heavy
//! lattice curves query only a handful of cells, so O(1) local tangents
//! beat building full tangent tables.

use crate::error::{Result, TcbmError};

/// Fritsch-Carlson interpolant over `values[i]` at `x0 + i·h`.
#[derive(Debug, Clone)]
pub struct UniformPchip {
    x0: f64,
    h: f64,
    values: Vec<f64>,
}

impl UniformPchip {
    pub fn new(x0: f64, h: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(TcbmError::domain("interpolation needs >= 2 points"));
        }
        if !(h > 0.0) {
            return Err(TcbmError::domain(format!("grid step h = {h} must be positive")));
        }
        Ok(UniformPchip { x0, h, values })
    }

    pub fn x_min(&self) -> f64 {
        self.x0
    }

    pub fn x_max(&self) -> f64 {
        self.x0 + (self.values.len() - 1) as f64 * self.h
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn x_at(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h
    }

    #[inline]
    fn secant(&self, i: usize) -> f64 {
        (self.values[i + 1] - self.values[i]) / self.h
    }

    /// Fritsch-Carlson tangent at node `i` (equal-spacing weights).
    fn tangent(&self, i: usize) -> f64 {
        let n = self.values.len();
        if n == 2 {
            return self.secant(0);
        }
        if i == 0 {
            return endpoint(self.secant(0), self.secant(1));
        }
        if i == n - 1 {
            return endpoint(self.secant(n - 2), self.secant(n - 3));
        }
        let d0 = self.secant(i - 1);
        let d1 = self.secant(i);
        if d0 * d1 <= 0.0 {
            0.0
        } else {
            2.0 * d0 * d1 / (d0 + d1)
        }
    }

    fn locate(&self, x: f64) -> Result<(usize, f64)> {
        let n = self.values.len();
        if x < self.x0 - 1e-12 || x > self.x_max() + 1e-12 {
            return Err(TcbmError::OutOfRange {
                what: "interpolation abscissa",
                value: x,
                lo: self.x0,
                hi: self.x_max(),
            });
        }
        let pos = (x - self.x0) / self.h;
        let i = (pos.floor() as usize).min(n - 2);
        Ok((i, pos - i as f64))
    }

    pub fn value(&self, x: f64) -> Result<f64> {
        let (i, t) = self.locate(x)?;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (d0, d1) = (self.tangent(i), self.tangent(i + 1));
        let t2 = t * t;
        let t3 = t2 * t;
        Ok((2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * self.h * d0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * self.h * d1)
    }

    pub fn derivative(&self, x: f64) -> Result<f64> {
        let (i, t) = self.locate(x)?;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (d0, d1) = (self.tangent(i), self.tangent(i + 1));
        let t2 = t * t;
        Ok((6.0 * t2 - 6.0 * t) * (y0 - y1) / self.h
            + (3.0 * t2 - 4.0 * t + 1.0) * d0
            + (3.0 * t2 - 2.0 * t) * d1)
    }
}

fn endpoint(d0: f64, d1: f64) -> f64 {
    // Three-point one-sided rule with the usual monotonicity clamps.
    let mut t = 1.5 * d0 - 0.5 * d1;
    if t * d0 <= 0.0 {
        t = 0.0;
    } else if d0 * d1 < 0.0 && t.abs() > 3.0 * d0.abs() {
        t = 3.0 * d0;
    }
    t
}
