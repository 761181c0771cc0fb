//! Discount curves, defaultable bonds and CDS spreads, including the
//! spread-curve-on-a-lattice machinery that the measurement inversion
//! rides on: one FFT per premium date yields the whole term structure of
//! spreads as a function of the starting log-leverage.

mod curve;

pub use curve::ZeroCurve;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TcbmError};
use crate::firstpassage::{self, FftGrid, SurvivalCurve, TcbmParams};
use crate::math::upchip::UniformPchip;
use crate::timechange::TimeChangeSpec;

/// Denominator floor below which a spread is not quotable.
const MIN_PREMIUM_LEG: f64 = 1e-12;
/// Fraction of the full reciprocal lattice carried by spread curves.
const CDS_LATTICE_FRACTION: f64 = 0.28;

/// Terms of a plain CDS contract: maturity, premium interval and recovery.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdsContractSpec {
    tenor: f64,
    premium_dt: f64,
    recovery: f64,
}

impl CdsContractSpec {
    /// `tenor` must be an integer number of premium intervals; recovery in [0, 1).
    pub fn new(tenor: f64, premium_dt: f64, recovery: f64) -> Result<Self> {
        if !(premium_dt > 0.0) {
            return Err(TcbmError::domain(format!("premium interval {premium_dt} must be positive")));
        }
        let periods = tenor / premium_dt;
        if !(periods >= 1.0) || (periods - periods.round()).abs() > 1e-9 {
            return Err(TcbmError::domain(format!(
                "tenor {tenor} is not an integer multiple of the premium interval {premium_dt}"
            )));
        }
        if !(0.0..1.0).contains(&recovery) {
            return Err(TcbmError::domain(format!("recovery {recovery} outside [0, 1)")));
        }
        Ok(CdsContractSpec { tenor, premium_dt, recovery })
    }

    pub fn tenor(&self) -> f64 {
        self.tenor
    }

    pub fn premium_dt(&self) -> f64 {
        self.premium_dt
    }

    pub fn recovery(&self) -> f64 {
        self.recovery
    }

    /// Number of premium dates N.
    pub fn periods(&self) -> usize {
        (self.tenor / self.premium_dt).round() as usize
    }
}

/// Price of a defaultable zero-coupon bond under recovery-of-treasury:
/// `B(T)·[P(T, x) + R·(1 - P(T, x))]` with `x = params.x`.
pub fn defaultable_bond(
    spec: &TimeChangeSpec,
    params_q: &TcbmParams,
    curve: &ZeroCurve,
    recovery: f64,
    maturity: f64,
    grid: &FftGrid,
) -> Result<f64> {
    if !(maturity > 0.0) {
        return Err(TcbmError::domain(format!("maturity {maturity} must be positive")));
    }
    if !(0.0..=1.0).contains(&recovery) {
        return Err(TcbmError::domain(format!("recovery {recovery} outside [0, 1]")));
    }
    let p = firstpassage::survival_point(spec, params_q, maturity, params_q.x, grid)?;
    Ok(curve.discount(maturity)? * (p + recovery * (1.0 - p)))
}

/// Par CDS spread as a function of the starting log-leverage, tabulated
/// over the quotable part of the x-lattice with a monotone interpolant.
#[derive(Debug, Clone)]
pub struct CdsSpreadCurve {
    interp: UniformPchip,
}

impl CdsSpreadCurve {
    fn build(x0: f64, h: f64, spreads: Vec<f64>) -> Result<Self> {
        Ok(CdsSpreadCurve { interp: UniformPchip::new(x0, h, spreads)? })
    }

    /// Par spreads at the lattice abscissae, decimals per annum.
    pub fn spreads(&self) -> &[f64] {
        self.interp.values()
    }

    /// Abscissa of lattice node `i`.
    pub fn x_at(&self, i: usize) -> f64 {
        self.interp.x_at(i)
    }

    /// Quotable abscissa range.
    pub fn x_range(&self) -> (f64, f64) {
        (self.interp.x_min(), self.interp.x_max())
    }

    /// Spread at an arbitrary starting point (monotone interpolation,
    /// exact at lattice nodes).
    pub fn at(&self, x: f64) -> Result<f64> {
        self.interp.value(x)
    }

    /// Derivative of the interpolated spread in the starting point
    /// (negative on the interior).
    pub fn slope(&self, x: f64) -> Result<f64> {
        if x <= self.interp.x_min() || x >= self.interp.x_max() {
            return Err(TcbmError::OutOfRange {
                what: "slope abscissa (lattice interior required)",
                value: x,
                lo: self.interp.x_min(),
                hi: self.interp.x_max(),
            });
        }
        self.interp.derivative(x)
    }

    /// Attainable spread range `(lowest, highest)`.
    pub fn range(&self) -> (f64, f64) {
        let s = self.spreads();
        (*s.last().unwrap(), s[0])
    }

    /// Solve `spread(x) = y` on the interpolant by bracketed
    /// Newton/bisection to `|spread(x) - y| <= 1e-10·max(1, y)`.
    pub fn invert(&self, y: f64) -> Result<f64> {
        let (lo_s, hi_s) = self.range();
        if !(y >= lo_s && y <= hi_s) {
            return Err(TcbmError::OutOfRange {
                what: "target spread",
                value: y,
                lo: lo_s,
                hi: hi_s,
            });
        }
        // Spreads decrease in x: find the bracketing cell.
        let spreads = self.spreads();
        let idx = spreads.partition_point(|&s| s > y);
        let (mut a, mut b) = if idx == 0 {
            (self.x_at(0), self.x_at(0))
        } else if idx >= spreads.len() {
            let last = spreads.len() - 1;
            (self.x_at(last), self.x_at(last))
        } else {
            (self.x_at(idx - 1), self.x_at(idx))
        };
        if a == b {
            return Ok(a);
        }
        let tol = 1e-10 * y.max(1.0);
        // Iterate to machine precision in x (not just to the spread
        // tolerance) so the inverse map is smooth in the model parameters;
        // finite-difference gradients of the likelihood depend on it.
        let mut x = 0.5 * (a + b);
        let mut converged = false;
        for _ in 0..200 {
            let f = self.interp.value(x)? - y;
            if f.abs() <= tol {
                converged = true;
            }
            // Maintain the bracket: f > 0 means spread too high, x too low.
            if f > 0.0 {
                a = x;
            } else {
                b = x;
            }
            let d = self.interp.derivative(x)?;
            let newton = if d != 0.0 { x - f / d } else { f64::NAN };
            let next = if newton.is_finite() && newton > a && newton < b {
                newton
            } else {
                0.5 * (a + b)
            };
            let step = (next - x).abs();
            x = next;
            if converged && step <= 1e-14 * (1.0 + x.abs()) {
                return Ok(x);
            }
            if b - a <= 1e-15 * (1.0 + x.abs()) {
                break;
            }
        }
        if converged {
            return Ok(x);
        }
        Err(TcbmError::NoConvergence(format!("spread inversion stalled at y = {y}")))
    }
}

/// Cached survival lattices for all premium horizons of one issuer model,
/// from which per-date spread curves are assembled cheaply.
#[derive(Debug)]
pub struct CdsPricer {
    premium_dt: f64,
    grid: FftGrid,
    /// Survival curves for t_k = k·premium_dt, k = 1..=N_max.
    survivals: Vec<SurvivalCurve>,
}

impl CdsPricer {
    /// Precompute survival lattices for every premium date out to
    /// `max_tenor` (one FFT per horizon).
    pub fn new(
        spec: &TimeChangeSpec,
        params_q: &TcbmParams,
        grid: &FftGrid,
        premium_dt: f64,
        max_tenor: f64,
    ) -> Result<Self> {
        if !(premium_dt > 0.0) || !(max_tenor >= premium_dt) {
            return Err(TcbmError::domain("need 0 < premium_dt <= max_tenor"));
        }
        let n_max = (max_tenor / premium_dt).round() as usize;
        let fft = firstpassage::survival::plan_inverse(grid.n());
        let survivals = (1..=n_max)
            .map(|k| {
                firstpassage::survival::survival_lattice_with(
                    spec,
                    params_q,
                    k as f64 * premium_dt,
                    grid,
                    fft.as_ref(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CdsPricer { premium_dt, grid: *grid, survivals })
    }

    pub fn grid(&self) -> &FftGrid {
        &self.grid
    }

    pub fn premium_dt(&self) -> f64 {
        self.premium_dt
    }

    /// Survival curve at premium date index `k` (1-based).
    pub fn survival_curve(&self, k: usize) -> &SurvivalCurve {
        &self.survivals[k - 1]
    }

    /// Spread curves for several contracts sharing the premium interval,
    /// assembled in one sweep over the premium dates.
    pub fn spread_curves(
        &self,
        contracts: &[CdsContractSpec],
        curve: &ZeroCurve,
    ) -> Result<Vec<CdsSpreadCurve>> {
        for c in contracts {
            if (c.premium_dt() - self.premium_dt).abs() > 1e-12 {
                return Err(TcbmError::domain(
                    "contract premium interval differs from the pricer's",
                ));
            }
            if c.periods() > self.survivals.len() {
                return Err(TcbmError::domain(format!(
                    "tenor {} exceeds the pricer's precomputed horizon",
                    c.tenor()
                )));
            }
        }
        // Skip the x = 0 node and cap the curve well inside the reliable
        // lattice half: beyond it spreads sit below numerical resolution
        // for any realistic quote and the nodes only cost time.
        let m = ((self.grid.n() as f64 * CDS_LATTICE_FRACTION) as usize)
            .min(self.grid.usable_len() - 1);
        let discounts: Vec<f64> = (0..=self.survivals.len())
            .map(|k| curve.discount(k as f64 * self.premium_dt))
            .collect::<Result<Vec<_>>>()?;

        // Running protection-leg partial sum over k = 1..N-1 and premium
        // leg over k = 1..N, shared by all tenors.
        let mut protection = vec![0.0f64; m];
        let mut premium = vec![0.0f64; m];
        let mut curves = Vec::with_capacity(contracts.len());
        let mut by_periods: Vec<(usize, usize)> =
            contracts.iter().enumerate().map(|(i, c)| (c.periods(), i)).collect();
        by_periods.sort_unstable();
        let mut results: Vec<Option<CdsSpreadCurve>> = vec![None; contracts.len()];

        let mut k = 1usize;
        for &(periods, idx) in &by_periods {
            // After this loop, `premium` holds k = 1..N and `protection`
            // holds k = 1..N-1: the protection term lags one premium date
            // so that intermediate tenor boundaries are not dropped.
            while k <= periods {
                if k >= 2 {
                    let prev = &self.survivals[k - 2].values()[1..];
                    let db = discounts[k - 1] - discounts[k];
                    for l in 0..m {
                        protection[l] += (1.0 - prev[l]) * db;
                    }
                }
                let values = &self.survivals[k - 1].values()[1..];
                let b_k = discounts[k];
                for l in 0..m {
                    premium[l] += values[l] * b_k;
                }
                k += 1;
            }
            let contract = &contracts[idx];
            let values_n = &self.survivals[periods - 1].values()[1..];
            let b_n = discounts[periods];
            let lgd = 1.0 - contract.recovery();
            // The premium leg grows in x, so the quotable region is a
            // contiguous upper block of nodes.
            let first = (0..m)
                .find(|&l| self.premium_dt * premium[l] >= MIN_PREMIUM_LEG)
                .ok_or_else(|| {
                    TcbmError::numerical("no quotable lattice node for the spread curve")
                })?;
            let spreads: Vec<f64> = (first..m)
                .map(|l| {
                    lgd * (protection[l] + b_n * (1.0 - values_n[l]))
                        / (self.premium_dt * premium[l])
                })
                .collect();
            if spreads.len() < 4 {
                return Err(TcbmError::numerical(
                    "too few quotable lattice nodes to build a spread curve",
                ));
            }
            results[idx] =
                Some(CdsSpreadCurve::build(self.grid.x(first + 1), self.grid.eta_star(), spreads)?);
        }
        for r in results {
            curves.push(r.expect("every contract produced a curve"));
        }
        Ok(curves)
    }

    /// Spread curve for a single contract.
    pub fn spread_curve(
        &self,
        contract: &CdsContractSpec,
        curve: &ZeroCurve,
    ) -> Result<CdsSpreadCurve> {
        Ok(self.spread_curves(std::slice::from_ref(contract), curve)?.remove(0))
    }
}

/// Build the pricer for one contract and return its lattice spread curve.
pub fn cds_curve_on_lattice(
    spec: &TimeChangeSpec,
    params_q: &TcbmParams,
    curve: &ZeroCurve,
    contract: &CdsContractSpec,
    grid: &FftGrid,
) -> Result<CdsSpreadCurve> {
    CdsPricer::new(spec, params_q, grid, contract.premium_dt(), contract.tenor())?
        .spread_curve(contract, curve)
}

/// Par CDS spread for starting log-leverage `x` (decimals per annum).
///
/// Off-lattice values interpolate the lattice curve, so this function,
/// [`invert_cds`] and [`cds_slope`] are mutually consistent.
pub fn cds_spread(
    spec: &TimeChangeSpec,
    params_q: &TcbmParams,
    curve: &ZeroCurve,
    contract: &CdsContractSpec,
    x: f64,
    grid: &FftGrid,
) -> Result<f64> {
    if !(x > 0.0) {
        return Err(TcbmError::domain(format!("starting point x = {x} must be positive")));
    }
    cds_curve_on_lattice(spec, params_q, curve, contract, grid)?.at(x)
}

/// Starting log-leverage that reproduces an observed spread.
pub fn invert_cds(
    spec: &TimeChangeSpec,
    params_q: &TcbmParams,
    curve: &ZeroCurve,
    contract: &CdsContractSpec,
    y: f64,
    grid: &FftGrid,
) -> Result<f64> {
    cds_curve_on_lattice(spec, params_q, curve, contract, grid)?.invert(y)
}

/// Sensitivity of the par spread to the starting log-leverage
/// (`< 0` on the interior; the measurement scheme uses its magnitude).
pub fn cds_slope(
    spec: &TimeChangeSpec,
    params_q: &TcbmParams,
    curve: &ZeroCurve,
    contract: &CdsContractSpec,
    x: f64,
    grid: &FftGrid,
) -> Result<f64> {
    cds_curve_on_lattice(spec, params_q, curve, contract, grid)?.slope(x)
}
