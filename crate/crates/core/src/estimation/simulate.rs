//! Synthetic CDS panel generation: the hidden log-leverage path is drawn
//! from the survival-conditioned transition density by inverse-CDF
//! sampling on a fine lattice, and quotes are the model spreads plus
//! scaled bid/ask noise.

use chrono::{Duration, NaiveDate};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Result, TcbmError};
use crate::firstpassage::{FftGrid, TransitionKernel};
use crate::model::{ModelConfig, Theta};
use crate::panel::{CdsPanel, PanelRow};
use crate::pricing::{CdsContractSpec, CdsPricer, ZeroCurve};

/// How bid/ask widths are generated.
#[derive(Debug, Clone, Copy)]
pub enum WidthProfile {
    /// Constant width in decimals per annum.
    Constant(f64),
    /// `max(frac·mid_model, floor)`.
    Proportional { frac: f64, floor: f64 },
}

impl WidthProfile {
    fn width(&self, model_spread: f64) -> f64 {
        match *self {
            WidthProfile::Constant(w) => w,
            WidthProfile::Proportional { frac, floor } => (frac * model_spread).max(floor),
        }
    }
}

impl Default for WidthProfile {
    /// Bid/ask widths around 2.5% of the quote level (a few basis points
    /// on liquid names), floored at 1.5bp.
    fn default() -> Self {
        WidthProfile::Proportional { frac: 0.025, floor: 1.5e-4 }
    }
}

/// Inputs of one synthetic panel.
#[derive(Debug, Clone)]
pub struct SimulationSpec {
    pub config: ModelConfig,
    pub theta: Theta,
    /// Starting log-leverage.
    pub x0: f64,
    /// Number of weekly observations.
    pub weeks: usize,
    pub widths: WidthProfile,
    /// Flat zero rate of the synthetic treasury curve.
    pub rate: f64,
    pub start_date: NaiveDate,
}

impl SimulationSpec {
    pub fn new(config: ModelConfig, theta: Theta, x0: f64, weeks: usize) -> Self {
        SimulationSpec {
            config,
            theta,
            x0,
            weeks,
            widths: WidthProfile::default(),
            rate: 0.03,
            start_date: NaiveDate::from_ymd_opt(2006, 1, 4).expect("valid date"),
        }
    }
}

/// A generated panel with its hidden truth.
#[derive(Debug, Clone)]
pub struct SimulatedPanel {
    pub panel: CdsPanel,
    /// True log-leverage per retained date.
    pub x_true: Vec<f64>,
    /// Discount curve per retained date.
    pub curves: Vec<ZeroCurve>,
    /// Date index at which default occurred, if the path died early.
    pub defaulted: Option<usize>,
}

/// Lattice used for transition sampling: finer reciprocal spacing than
/// the pricing lattice so inverse-CDF draws carry negligible
/// discretization bias.
pub fn simulation_grid() -> FftGrid {
    FftGrid::with_u_bar(1 << 13, 2400.0).expect("valid simulation lattice")
}

/// Draw one panel. The draw order per date is: K quote noises, then the
/// default indicator, then the transition draw, so a fixed seed yields a
/// bit-identical panel.
pub fn simulate_panel(sim: &SimulationSpec, seed: u64) -> Result<SimulatedPanel> {
    if sim.weeks == 0 {
        return Err(TcbmError::domain("simulation needs at least one week"));
    }
    if !(sim.x0 > 0.0) {
        return Err(TcbmError::domain(format!("x0 = {} must be positive", sim.x0)));
    }
    let config = &sim.config;
    let theta = &sim.theta;
    let spec = config.spec(theta)?;
    let params_q = config.params_q(sim.x0, theta)?;
    let params_p = config.params_p(sim.x0)?;

    let pricer =
        CdsPricer::new(&spec, &params_q, &config.grid, config.premium_dt, config.max_tenor())?;
    let contracts: Vec<CdsContractSpec> = config
        .tenors
        .iter()
        .map(|&t| CdsContractSpec::new(t, config.premium_dt, theta.recovery))
        .collect::<Result<_>>()?;

    let sim_grid = simulation_grid();
    let kernel = TransitionKernel::new(&spec, &params_p, config.obs_dt, &sim_grid)?;

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(sim.weeks);
    let mut x_true = Vec::with_capacity(sim.weeks);
    let mut curves = Vec::with_capacity(sim.weeks);
    let mut defaulted = None;
    let mut x = sim.x0;

    for t in 0..sim.weeks {
        let date = sim.start_date + Duration::days(7 * t as i64);
        let curve = ZeroCurve::flat(date, sim.rate);
        let spread_curves = pricer.spread_curves(&contracts, &curve)?;
        let mut mid = Vec::with_capacity(contracts.len());
        let mut width = Vec::with_capacity(contracts.len());
        for sc in &spread_curves {
            let model = sc.at(x)?;
            let w = sim.widths.width(model);
            let z: f64 = StandardNormal.sample(&mut rng);
            let quote = (model + theta.eta * w * z).max(0.51 * w);
            mid.push(Some(quote));
            width.push(Some(w));
        }
        rows.push(PanelRow { date, mid, width, no_default: true });
        x_true.push(x);
        curves.push(curve);

        if t + 1 < sim.weeks {
            let p_surv = kernel.survival(x)?;
            if rng.gen::<f64>() >= p_surv {
                defaulted = Some(t + 1);
                break;
            }
            x = sample_transition(&kernel, x, &mut rng)?;
        }
    }

    let panel = CdsPanel::new(config.tenors.clone(), rows)?;
    Ok(SimulatedPanel { panel, x_true, curves, defaulted })
}

/// Tabulated inverse CDF of the survival-conditioned transition density
/// from one starting point (piecewise-linear CDF on the lattice).
#[derive(Debug, Clone)]
pub struct TransitionDraw {
    cdf: Vec<f64>,
    h: f64,
}

impl TransitionDraw {
    pub fn new(kernel: &TransitionKernel, x: f64) -> Result<Self> {
        let density = kernel.conditional_density(x)?;
        let values = density.values();
        let h = kernel.grid().eta_star();
        let mut cdf = Vec::with_capacity(values.len());
        let mut acc = 0.0;
        cdf.push(0.0);
        for l in 1..values.len() {
            acc += 0.5 * h * (values[l - 1] + values[l]);
            cdf.push(acc);
        }
        if !(acc > 0.0) {
            return Err(TcbmError::numerical("empty transition density"));
        }
        Ok(TransitionDraw { cdf, h })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let total = *self.cdf.last().unwrap();
        let u = rng.gen::<f64>() * total;
        let idx = self.cdf.partition_point(|&c| c < u).clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[idx - 1], self.cdf[idx]);
        let frac = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
        (idx - 1) as f64 * self.h + frac * self.h
    }
}

/// One inverse-CDF draw from the transition density; repeated draws from
/// the same point should reuse a [`TransitionDraw`].
pub fn sample_transition<R: Rng + ?Sized>(
    kernel: &TransitionKernel,
    x: f64,
    rng: &mut R,
) -> Result<f64> {
    Ok(TransitionDraw::new(kernel, x)?.sample(rng))
}
