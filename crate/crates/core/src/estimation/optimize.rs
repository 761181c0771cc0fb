//! Box-constrained quasi-Newton maximization with finite-difference
//! gradients: BFGS on the inverse Hessian, gradient projection at the
//! bounds, Armijo backtracking.

use crate::error::{Result, TcbmError};

/// Convergence and stencil settings.
#[derive(Debug, Clone)]
pub struct OptOptions {
    /// Cap on objective evaluations (gradient stencils included).
    pub max_evals: usize,
    /// Converged when the projected gradient infinity-norm falls below
    /// `grad_tol_rel·max(1, |f|)`.
    pub grad_tol_rel: f64,
    /// Converged when the accepted step falls below this.
    pub step_tol: f64,
    /// Relative step for central-difference gradients.
    pub fd_rel_step: f64,
}

impl Default for OptOptions {
    fn default() -> Self {
        OptOptions { max_evals: 500, grad_tol_rel: 1e-6, step_tol: 1e-9, fd_rel_step: 1e-5 }
    }
}

/// Why the iteration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    GradientSmall,
    StepSmall,
    /// Evaluation budget exhausted before meeting a tolerance.
    Budget,
}

/// One row of the iteration trace.
#[derive(Debug, Clone, serde::Serialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub x: Vec<f64>,
    pub f: f64,
    pub grad_norm: f64,
}

/// Result of a maximization run.
#[derive(Debug, Clone)]
pub struct OptOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub iterations: usize,
    pub stop: StopReason,
    pub trace: Vec<TracePoint>,
}

fn clip(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for i in 0..x.len() {
        x[i] = x[i].clamp(lo[i], hi[i]);
    }
}

/// Maximize `f` over the box `[lo, hi]`. The objective may return
/// `-infinity` (or an error, treated the same) at trial points; the line
/// search backs away from them. An error at the starting point aborts.
pub fn maximize_box<F: FnMut(&[f64]) -> Result<f64>>(
    mut f: F,
    x0: &[f64],
    lo: &[f64],
    hi: &[f64],
    opts: &OptOptions,
) -> Result<OptOutcome> {
    let n = x0.len();
    let mut x = x0.to_vec();
    clip(&mut x, lo, hi);

    let mut evals = 0usize;
    let eval = |f: &mut F, x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        match f(x) {
            Ok(v) if v.is_finite() => v,
            _ => f64::NEG_INFINITY,
        }
    };

    let mut fx = eval(&mut f, &x, &mut evals);
    if !fx.is_finite() {
        return Err(TcbmError::domain(
            "objective not evaluable at the starting point",
        ));
    }

    let gradient = |f: &mut F, x: &[f64], evals: &mut usize| -> Vec<f64> {
        let mut g = vec![0.0; n];
        for i in 0..n {
            let h = opts.fd_rel_step * x[i].abs().max(1e-2);
            let up = (x[i] + h).min(hi[i]);
            let dn = (x[i] - h).max(lo[i]);
            let mut xp = x.to_vec();
            xp[i] = up;
            let fp = eval(f, &xp, evals);
            xp[i] = dn;
            let fm = eval(f, &xp, evals);
            g[i] = if fp.is_finite() && fm.is_finite() && up > dn {
                (fp - fm) / (up - dn)
            } else {
                0.0
            };
        }
        g
    };

    let project_grad = |x: &[f64], g: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                if x[i] <= lo[i] + 1e-12 && g[i] < 0.0 {
                    0.0
                } else if x[i] >= hi[i] - 1e-12 && g[i] > 0.0 {
                    0.0
                } else {
                    g[i]
                }
            })
            .collect()
    };

    // Inverse-Hessian approximation (row-major dense).
    let mut h_inv: Vec<f64> = (0..n * n).map(|k| if k % (n + 1) == 0 { 1.0 } else { 0.0 }).collect();
    let mut g = gradient(&mut f, &x, &mut evals);
    let mut trace = Vec::new();
    let stop;
    let mut iteration = 0usize;

    loop {
        let gp = project_grad(&x, &g);
        let gnorm = gp.iter().fold(0.0_f64, |a, &v| a.max(v.abs()));
        trace.push(TracePoint { iteration, x: x.clone(), f: fx, grad_norm: gnorm });
        if gnorm <= opts.grad_tol_rel * fx.abs().max(1.0) {
            stop = StopReason::GradientSmall;
            break;
        }
        if evals >= opts.max_evals {
            stop = StopReason::Budget;
            break;
        }

        // Ascent direction d = H·g (maximization).
        let mut d = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                d[i] += h_inv[i * n + j] * g[j];
            }
        }
        if d.iter().zip(g.iter()).map(|(a, b)| a * b).sum::<f64>() <= 0.0 {
            // Lost positive definiteness; reset to steepest ascent.
            h_inv.iter_mut().enumerate().for_each(|(k, v)| *v = if k % (n + 1) == 0 { 1.0 } else { 0.0 });
            d = g.clone();
        }

        // Backtracking Armijo line search on the projected path.
        let mut t = 1.0;
        let mut accepted = false;
        let mut x_new = x.clone();
        let mut f_new = fx;
        for _ in 0..40 {
            let mut cand: Vec<f64> = (0..n).map(|i| x[i] + t * d[i]).collect();
            clip(&mut cand, lo, hi);
            let step: Vec<f64> = (0..n).map(|i| cand[i] - x[i]).collect();
            let slope: f64 = step.iter().zip(g.iter()).map(|(s, gi)| s * gi).sum();
            let fc = eval(&mut f, &cand, &mut evals);
            if fc.is_finite() && slope > 0.0 && fc >= fx + 1e-4 * slope {
                x_new = cand;
                f_new = fc;
                accepted = true;
                break;
            }
            t *= 0.5;
            if evals >= opts.max_evals {
                break;
            }
        }
        if !accepted {
            stop = if evals >= opts.max_evals { StopReason::Budget } else { StopReason::StepSmall };
            break;
        }
        let s: Vec<f64> = (0..n).map(|i| x_new[i] - x[i]).collect();
        let step_norm = s.iter().fold(0.0_f64, |a, &v| a.max(v.abs()));
        let g_new = gradient(&mut f, &x_new, &mut evals);
        let y: Vec<f64> = (0..n).map(|i| g_new[i] - g[i]).collect();

        // BFGS update on the inverse Hessian of the *negative* objective
        // (equivalently, flip signs: for maximization y -> -y, g -> -g).
        let sy: f64 = s.iter().zip(y.iter()).map(|(a, b)| a * b).sum();
        if sy < -1e-12 {
            // Curvature is negative for a maximization step (f concave
            // locally): update with rho = 1/(s·y) under the minimize sign
            // convention.
            let rho = 1.0 / -sy;
            // H <- (I - rho s yT) H (I - rho y sT) + rho s sT with the
            // minimize-convention vectors (-y).
            let ym: Vec<f64> = y.iter().map(|v| -v).collect();
            let mut hy = vec![0.0; n];
            for i in 0..n {
                for j in 0..n {
                    hy[i] += h_inv[i * n + j] * ym[j];
                }
            }
            let yhy: f64 = ym.iter().zip(hy.iter()).map(|(a, b)| a * b).sum();
            for i in 0..n {
                for j in 0..n {
                    h_inv[i * n + j] += (1.0 + rho * yhy) * rho * s[i] * s[j]
                        - rho * (s[i] * hy[j] + hy[i] * s[j]);
                }
            }
        }

        x = x_new;
        fx = f_new;
        g = g_new;
        iteration += 1;

        if step_norm <= opts.step_tol {
            stop = StopReason::StepSmall;
            break;
        }
        if evals >= opts.max_evals {
            stop = StopReason::Budget;
            break;
        }
    }

    Ok(OptOutcome { x, f: fx, evals, iterations: iteration, stop, trace })
}
