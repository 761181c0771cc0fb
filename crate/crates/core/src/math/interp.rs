//! Shape-preserving piecewise-cubic interpolation (Fritsch-Carlson PCHIP).
//!
//! Monotone data produces a monotone C^1 interpolant, which is what the
//! survival curves and CDS spread curves need for safe root finding.

use crate::error::{Result, TcbmError};

/// Monotone piecewise-cubic Hermite interpolant over a strictly
/// increasing abscissa grid.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ds: Vec<f64>,
}

impl MonotoneCubic {
    /// Build the interpolant. `xs` must be strictly increasing and at
    /// least two points long.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(TcbmError::domain("interpolation needs >= 2 matching points"));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(TcbmError::domain("interpolation abscissae must strictly increase"));
        }
        let ds = fritsch_carlson_tangents(&xs, &ys);
        Ok(MonotoneCubic { xs, ys, ds })
    }

    pub fn x_min(&self) -> f64 {
        self.xs[0]
    }

    pub fn x_max(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    fn cell(&self, x: f64) -> usize {
        // partition_point returns the first index with xs[i] > x.
        let idx = self.xs.partition_point(|&v| v <= x);
        idx.clamp(1, self.xs.len() - 1) - 1
    }

    /// Interpolated value; `x` must lie within the abscissa range.
    pub fn value(&self, x: f64) -> Result<f64> {
        self.check_range(x)?;
        let i = self.cell(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (h00, h10, h01, h11) = hermite_basis(t);
        Ok(h00 * self.ys[i] + h10 * h * self.ds[i] + h01 * self.ys[i + 1] + h11 * h * self.ds[i + 1])
    }

    /// Derivative of the interpolant; `x` must lie within range.
    pub fn derivative(&self, x: f64) -> Result<f64> {
        self.check_range(x)?;
        let i = self.cell(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let dh00 = (6.0 * t * t - 6.0 * t) / h;
        let dh10 = 3.0 * t * t - 4.0 * t + 1.0;
        let dh01 = -dh00;
        let dh11 = 3.0 * t * t - 2.0 * t;
        Ok(dh00 * self.ys[i] + dh10 * self.ds[i] + dh01 * self.ys[i + 1] + dh11 * self.ds[i + 1])
    }

    fn check_range(&self, x: f64) -> Result<()> {
        if x < self.x_min() - 1e-12 || x > self.x_max() + 1e-12 {
            return Err(TcbmError::OutOfRange {
                what: "interpolation abscissa",
                value: x,
                lo: self.x_min(),
                hi: self.x_max(),
            });
        }
        Ok(())
    }
}

#[inline]
fn hermite_basis(t: f64) -> (f64, f64, f64, f64) {
    let t2 = t * t;
    let t3 = t2 * t;
    (
        2.0 * t3 - 3.0 * t2 + 1.0,
        t3 - 2.0 * t2 + t,
        -2.0 * t3 + 3.0 * t2,
        t3 - t2,
    )
}

/// Fritsch-Carlson tangent selection: weighted harmonic means of the
/// secants in the interior, clamped three-point formulas at the ends.
fn fritsch_carlson_tangents(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
    let mut d = vec![0.0; n];

    if n == 2 {
        d[0] = delta[0];
        d[1] = delta[0];
        return d;
    }

    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] <= 0.0 {
            d[i] = 0.0;
        } else {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    d[0] = endpoint_tangent(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = endpoint_tangent(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

fn endpoint_tangent(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let mut t = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if t * d0 <= 0.0 {
        t = 0.0;
    } else if d0 * d1 < 0.0 && t.abs() > 3.0 * d0.abs() {
        t = 3.0 * d0;
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn exact_at_nodes() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| (2.0 * x).tanh()).collect();
        let interp = MonotoneCubic::new(xs.clone(), ys.clone()).unwrap();
        for (x, y) in xs.iter().zip(ys.iter()) {
            assert_relative_eq!(interp.value(*x).unwrap(), *y, epsilon = 1e-14);
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let xs: Vec<f64> = (0..50).map(|i| i as f64 * 0.05).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| (-x).exp()).collect();
        let interp = MonotoneCubic::new(xs, ys).unwrap();
        let h = 1e-6;
        for &x in &[0.11, 0.73, 1.9, 2.44] {
            let fd = (interp.value(x + h).unwrap() - interp.value(x - h).unwrap()) / (2.0 * h);
            assert_relative_eq!(interp.derivative(x).unwrap(), fd, max_relative = 1e-6);
        }
    }

    #[test]
    fn out_of_range_rejected() {
        let interp = MonotoneCubic::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        assert!(interp.value(1.5).is_err());
        assert!(interp.value(-0.2).is_err());
    }

    proptest! {
        // Monotone input data must give an interpolant that stays within the
        // data range and preserves ordering between nodes.
        #[test]
        fn preserves_monotonicity(increments in prop::collection::vec(0.0f64..1.0, 4..24)) {
            let mut y = 0.0;
            let ys: Vec<f64> = increments.iter().map(|dy| { y += dy; y }).collect();
            let xs: Vec<f64> = (0..ys.len()).map(|i| i as f64).collect();
            let lo = ys[0];
            let hi = *ys.last().unwrap();
            let interp = MonotoneCubic::new(xs.clone(), ys).unwrap();
            let mut prev = f64::NEG_INFINITY;
            let samples = (xs.len() - 1) * 7;
            for s in 0..=samples {
                let x = xs[0] + (xs[xs.len()-1] - xs[0]) * s as f64 / samples as f64;
                let v = interp.value(x).unwrap();
                prop_assert!(v >= prev - 1e-12);
                prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
                prev = v;
            }
        }
    }
}
