//! Maximum-likelihood estimation of the free parameters, standard errors
//! from the observed Fisher information, model comparison, and the
//! synthetic-panel harness used to validate both.

pub mod optimize;
pub mod simulate;
pub mod vuong;

pub use optimize::{OptOptions, StopReason, TracePoint};
pub use simulate::{simulate_panel, SimulatedPanel, SimulationSpec, TransitionDraw, WidthProfile};
pub use vuong::{newey_west_lag, newey_west_variance, vuong_test, VuongReport};

use log::warn;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, TcbmError};
use crate::filter::{run_filter, FilterMode};
use crate::model::{ModelConfig, ModelKind, Theta, ThetaBounds};
use crate::panel::CdsPanel;
use crate::pricing::{CdsContractSpec, CdsPricer, ZeroCurve};

/// Estimation controls beyond the optimizer tolerances.
#[derive(Debug, Clone)]
pub struct EstimationOptions {
    pub opt: OptOptions,
    /// Number of starting points (the supplied start plus deterministic
    /// spread-outs).
    pub multi_start: usize,
    /// Re-derive the Hessian at half the step and warn if any standard
    /// error moves by more than 5%.
    pub check_hessian_step: bool,
    pub mode: FilterMode,
}

impl Default for EstimationOptions {
    fn default() -> Self {
        EstimationOptions {
            opt: OptOptions::default(),
            multi_start: 3,
            check_hessian_step: true,
            mode: FilterMode::Truncated,
        }
    }
}

/// End point of one optimization start.
#[derive(Debug, Clone, Serialize)]
pub struct StartReport {
    pub init: Theta,
    pub theta: Theta,
    pub loglik: f64,
    pub evals: usize,
    pub stop: String,
}

/// Full output of a calibration.
#[derive(Debug, Clone, Serialize)]
pub struct EstimationResult {
    pub model: ModelKind,
    pub theta_hat: Theta,
    /// Standard errors aligned with (c, beta_q, recovery, eta); NaN for
    /// parameters the model does not carry.
    pub stderr: [f64; 4],
    pub loglik: f64,
    /// Observed information (negative Hessian) over the free parameters.
    pub fisher: Vec<Vec<f64>>,
    pub free_names: Vec<String>,
    /// Fit error in bid/ask units at the filtered path.
    pub rmse: f64,
    /// Filtered log-leverage (posterior mode).
    pub x_path: Vec<f64>,
    /// Posterior-mean path.
    pub x_path_mean: Vec<f64>,
    pub x_av: f64,
    /// Square root of the annualized quadratic variation of the path.
    pub x_std: f64,
    pub iterations: usize,
    pub function_evals: usize,
    /// False when the observed information is not positive definite or
    /// the standard errors are step-size sensitive.
    pub stderr_reliable: bool,
    pub starts: Vec<StartReport>,
    pub trace: Vec<TracePoint>,
    /// Weekly log-likelihood increments at the optimum.
    pub weekly: Vec<f64>,
}

fn free_indices(kind: ModelKind) -> Vec<usize> {
    if kind.has_jump_activity() {
        vec![0, 1, 2, 3]
    } else {
        vec![1, 2, 3]
    }
}

fn free_names(kind: ModelKind) -> Vec<String> {
    let names = ["c", "beta_q", "recovery", "eta"];
    free_indices(kind).into_iter().map(|i| names[i].to_string()).collect()
}

fn pack(theta: &Theta, kind: ModelKind) -> Vec<f64> {
    let a = theta.as_array();
    free_indices(kind).into_iter().map(|i| a[i]).collect()
}

fn unpack(v: &[f64], kind: ModelKind, base: &Theta) -> Theta {
    let mut a = base.as_array();
    for (slot, &idx) in free_indices(kind).iter().enumerate() {
        a[idx] = v[slot];
    }
    Theta::from_array(a)
}

/// Physical-domain guard for stencil evaluations that may step outside
/// the statistical box.
fn clip_physical(theta: &mut Theta) {
    theta.c = theta.c.max(1e-6);
    theta.beta_q = theta.beta_q.min(-1e-6);
    theta.recovery = theta.recovery.clamp(0.0, 0.999);
    theta.eta = theta.eta.max(1e-6);
}

/// Deterministic spread of starting points inside the box.
fn starting_points(init: &Theta, bounds: &ThetaBounds, n: usize) -> Vec<Theta> {
    let lo = bounds.lo();
    let hi = bounds.hi();
    let clip = |t: Theta| -> Theta {
        let mut a = t.as_array();
        for i in 0..4 {
            let span = hi[i] - lo[i];
            a[i] = a[i].clamp(lo[i] + 1e-3 * span, hi[i] - 1e-3 * span);
        }
        Theta::from_array(a)
    };
    let scales = [
        [1.0, 1.0, 1.0, 1.0],
        [1.8, 1.6, 0.7, 1.7],
        [0.5, 0.55, 1.3, 0.55],
        [3.0, 0.8, 0.5, 2.5],
        [0.25, 2.2, 1.1, 1.2],
    ];
    (0..n.clamp(1, scales.len()))
        .map(|j| {
            clip(Theta {
                c: init.c * scales[j][0],
                beta_q: init.beta_q * scales[j][1],
                recovery: init.recovery * scales[j][2],
                eta: init.eta * scales[j][3],
            })
        })
        .collect()
}

/// Maximize the filtered log-likelihood over the free parameters from a
/// panel and its per-date discount curves. Standard errors come from a
/// central-difference Hessian at the optimum (relative step 1e-4).
pub fn maximize_likelihood(
    panel: &CdsPanel,
    curves: &[ZeroCurve],
    config: &ModelConfig,
    init: &Theta,
    bounds: &ThetaBounds,
    options: &EstimationOptions,
) -> Result<EstimationResult> {
    if !bounds.contains(init) {
        return Err(TcbmError::domain("initial parameters outside the admissible box"));
    }
    let kind = config.kind;
    let idx = free_indices(kind);
    let lo_full = bounds.lo();
    let hi_full = bounds.hi();
    let lo: Vec<f64> = idx.iter().map(|&i| lo_full[i]).collect();
    let hi: Vec<f64> = idx.iter().map(|&i| hi_full[i]).collect();

    let objective = |v: &[f64]| -> Result<f64> {
        let theta = unpack(v, kind, init);
        Ok(run_filter(panel, curves, config, &theta, options.mode)?.loglik)
    };

    let starts = starting_points(init, bounds, options.multi_start);
    let outcomes: Vec<(Theta, Result<optimize::OptOutcome>)> = starts
        .par_iter()
        .map(|s| (*s, optimize::maximize_box(objective, &pack(s, kind), &lo, &hi, &options.opt)))
        .collect();

    let mut reports = Vec::new();
    let mut best: Option<optimize::OptOutcome> = None;
    for (start, outcome) in outcomes {
        match outcome {
            Ok(out) => {
                reports.push(StartReport {
                    init: start,
                    theta: unpack(&out.x, kind, init),
                    loglik: out.f,
                    evals: out.evals,
                    stop: format!("{:?}", out.stop),
                });
                if best.as_ref().map_or(true, |b| out.f > b.f) {
                    best = Some(out);
                }
            }
            Err(err) => {
                warn!("start {start:?} failed: {err}");
                reports.push(StartReport {
                    init: start,
                    theta: start,
                    loglik: f64::NEG_INFINITY,
                    evals: 0,
                    stop: format!("error: {err}"),
                });
            }
        }
    }
    let best =
        best.ok_or_else(|| TcbmError::NoConvergence("every optimization start failed".into()))?;
    if matches!(best.stop, StopReason::Budget) {
        return Err(TcbmError::NoConvergence(format!(
            "no convergence within {} objective evaluations",
            options.opt.max_evals
        )));
    }
    let theta_hat = unpack(&best.x, kind, init);

    // Observed information by central differences at the optimum.
    let eval_theta = |theta: &Theta| -> Result<f64> {
        Ok(run_filter(panel, curves, config, theta, options.mode)?.loglik)
    };
    let (fisher, stderr_free, mut reliable) =
        observed_information(&eval_theta, &theta_hat, kind, 1e-4)?;
    if options.check_hessian_step {
        if let Ok((_, stderr_half, _)) = observed_information(&eval_theta, &theta_hat, kind, 5e-5)
        {
            for (a, b) in stderr_free.iter().zip(stderr_half.iter()) {
                if a.is_finite() && b.is_finite() && (a / b - 1.0).abs() > 0.05 {
                    warn!(
                        "standard errors move by more than 5% when the Hessian step is halved \
                         ({a:.4e} vs {b:.4e})"
                    );
                    reliable = false;
                }
            }
        }
    }
    let mut stderr = [f64::NAN; 4];
    for (slot, &i) in idx.iter().enumerate() {
        stderr[i] = stderr_free[slot];
    }

    let run = run_filter(panel, curves, config, &theta_hat, options.mode)?;
    let fit_rmse = rmse(panel, curves, config, &theta_hat, &run.x_mode)?;
    let x_av = run.x_mode.iter().sum::<f64>() / run.x_mode.len() as f64;
    let x_std = annualized_quadratic_variation(&run.x_mode);

    Ok(EstimationResult {
        model: kind,
        theta_hat,
        stderr,
        loglik: best.f,
        fisher,
        free_names: free_names(kind),
        rmse: fit_rmse,
        x_path: run.x_mode.clone(),
        x_path_mean: run.x_mean.clone(),
        x_av,
        x_std,
        iterations: best.iterations,
        function_evals: best.evals,
        stderr_reliable: reliable,
        starts: reports,
        trace: best.trace,
        weekly: run.weekly,
    })
}

/// Square root of the annualized quadratic variation of a weekly path:
/// `sqrt(52/(M-1) · sum (dx)^2)`.
pub fn annualized_quadratic_variation(path: &[f64]) -> f64 {
    if path.len() < 2 {
        return 0.0;
    }
    let qv: f64 = path.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
    (qv * 52.0 / (path.len() - 1) as f64).sqrt()
}

/// Central-difference observed information over the free parameters:
/// `I = -H[log-likelihood]`, with per-coordinate relative step `rel`.
/// Returns (information matrix, standard errors, positive-definite flag).
fn observed_information<F: Fn(&Theta) -> Result<f64>>(
    eval: &F,
    theta_hat: &Theta,
    kind: ModelKind,
    rel: f64,
) -> Result<(Vec<Vec<f64>>, Vec<f64>, bool)> {
    let idx = free_indices(kind);
    let n = idx.len();
    let base = pack(theta_hat, kind);
    let h: Vec<f64> = base.iter().map(|v| rel * v.abs().max(1e-2)).collect();
    let at = |offsets: &[(usize, f64)]| -> Result<f64> {
        let mut v = base.clone();
        for &(i, d) in offsets {
            v[i] += d;
        }
        let mut theta = unpack(&v, kind, theta_hat);
        clip_physical(&mut theta);
        eval(&theta)
    };
    let f0 = at(&[])?;
    let mut hess = vec![vec![0.0; n]; n];
    for i in 0..n {
        let fp = at(&[(i, h[i])])?;
        let fm = at(&[(i, -h[i])])?;
        hess[i][i] = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
        for j in (i + 1)..n {
            let fpp = at(&[(i, h[i]), (j, h[j])])?;
            let fpm = at(&[(i, h[i]), (j, -h[j])])?;
            let fmp = at(&[(i, -h[i]), (j, h[j])])?;
            let fmm = at(&[(i, -h[i]), (j, -h[j])])?;
            let v = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    let info: Vec<Vec<f64>> = hess.iter().map(|row| row.iter().map(|v| -v).collect()).collect();
    let mat = DMatrix::from_fn(n, n, |i, j| info[i][j]);
    let (stderr, pd) = match mat.cholesky() {
        Some(chol) => {
            let inv = chol.inverse();
            ((0..n).map(|i| inv[(i, i)].sqrt()).collect::<Vec<f64>>(), true)
        }
        None => {
            warn!("observed information is not positive definite; standard errors unreliable");
            (
                (0..n)
                    .map(|i| if info[i][i] > 0.0 { (1.0 / info[i][i]).sqrt() } else { f64::NAN })
                    .collect(),
                false,
            )
        }
    };
    Ok((info, stderr, pd))
}

/// Root-mean-square fit error in bid/ask units:
/// `sqrt(mean of ((F^k(x_t) - Y^k_t)/w^k_t)^2)` over the present quotes.
pub fn rmse(
    panel: &CdsPanel,
    curves: &[ZeroCurve],
    config: &ModelConfig,
    theta: &Theta,
    x_path: &[f64],
) -> Result<f64> {
    if x_path.len() != panel.len() {
        return Err(TcbmError::domain("path length differs from panel length"));
    }
    let spec = config.spec(theta)?;
    let params_q = config.params_q(1.0, theta)?;
    let pricer =
        CdsPricer::new(&spec, &params_q, &config.grid, config.premium_dt, config.max_tenor())?;
    let contracts: Vec<CdsContractSpec> = config
        .tenors
        .iter()
        .map(|&t| CdsContractSpec::new(t, config.premium_dt, theta.recovery))
        .collect::<Result<_>>()?;
    let mut sum = 0.0;
    let mut count = 0usize;
    for (t, row) in panel.rows().iter().enumerate() {
        let spread_curves = pricer.spread_curves(&contracts, &curves[t])?;
        for (k, sc) in spread_curves.iter().enumerate() {
            if let (Some(mid), Some(width)) = (row.mid[k], row.width[k]) {
                if !(width > 0.0) {
                    return Err(TcbmError::domain(format!(
                        "zero width on date {t} tenor {}",
                        config.tenors[k]
                    )));
                }
                let model = sc.at(x_path[t])?;
                sum += ((model - mid) / width).powi(2);
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(TcbmError::domain("no quotes to evaluate"));
    }
    Ok((sum / count as f64).sqrt())
}

/// Weekly log-likelihood series under the Kalman (plain normal) variant;
/// sums to the Kalman-mode total of [`run_filter`].
pub fn weekly_loglik_kalman(
    panel: &CdsPanel,
    curves: &[ZeroCurve],
    config: &ModelConfig,
    theta: &Theta,
) -> Result<Vec<f64>> {
    Ok(run_filter(panel, curves, config, theta, FilterMode::Kalman)?.weekly)
}

#[cfg(test)]
mod tests;
