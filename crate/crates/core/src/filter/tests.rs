use approx::{assert_abs_diff_eq, assert_relative_eq};
use chrono::NaiveDate;

use super::*;
use crate::firstpassage::TransitionKernel;
use crate::math::{norm_cdf, norm_pdf};
use crate::model::ModelKind;
use crate::panel::{CdsPanel, PanelRow};

fn meas(quotes: Vec<Option<TransformedQuote>>) -> MeasurementVector {
    MeasurementVector { date_index: 0, quotes }
}

fn quote(x_tilde: f64, w_tilde: f64, width: f64) -> Option<TransformedQuote> {
    Some(TransformedQuote { x_tilde, w_tilde, width })
}

#[test]
fn single_tenor_diffuse_update() {
    let state = FilterState::diffuse(FilterMode::Truncated);
    let m = meas(vec![quote(0.8, 0.05, 0.002)]);
    let eta = 1.5;
    let out = measurement_update(&state, &m, eta).unwrap();
    assert_relative_eq!(out.mean, 0.8, epsilon = 1e-15);
    assert_relative_eq!(out.var, (eta * 0.05) * (eta * 0.05), epsilon = 1e-15);
    // Only the Jacobian factor contributes mass on the first fusion.
    assert_relative_eq!(out.loglik, (0.05f64 / 0.002).ln(), epsilon = 1e-12);
}

#[test]
fn equal_width_tenors_average() {
    let state = FilterState::diffuse(FilterMode::Truncated);
    let m = meas(vec![quote(0.6, 0.04, 0.002), quote(1.0, 0.04, 0.002)]);
    let out = measurement_update(&state, &m, 1.0).unwrap();
    assert_relative_eq!(out.mean, 0.8, epsilon = 1e-14);
}

#[test]
fn masked_tenors_are_ignored_and_empty_dates_error() {
    let state = FilterState::diffuse(FilterMode::Truncated);
    let m = meas(vec![None, quote(0.7, 0.03, 0.001), None]);
    let out = measurement_update(&state, &m, 1.0).unwrap();
    assert_relative_eq!(out.mean, 0.7, epsilon = 1e-15);
    assert!(measurement_update(&state, &meas(vec![None, None]), 1.0).is_err());
}

#[test]
fn fusion_matches_numerical_product_on_a_grid() {
    // Seven tenors with unequal widths against brute-force
    // product-and-normalize over a fine grid.
    let quotes: Vec<Option<TransformedQuote>> = vec![
        quote(0.72, 0.031, 0.0017),
        quote(0.78, 0.044, 0.0015),
        quote(0.69, 0.052, 0.0013),
        quote(0.81, 0.060, 0.0012),
        quote(0.75, 0.071, 0.0011),
        quote(0.77, 0.085, 0.0010),
        quote(0.73, 0.104, 0.0009),
    ];
    let eta = 1.5;
    let state = FilterState::diffuse(FilterMode::Truncated);
    let out = measurement_update(&state, &meas(quotes.clone()), eta).unwrap();

    // Numeric: flat prior on (0, inf), multiply the exact measurement
    // density of Eq.-form (Jacobian-recombined prefactors included).
    let n = 400_001;
    let (lo, hi) = (0.0, 4.0);
    let h = (hi - lo) / (n - 1) as f64;
    let mut mass = 0.0;
    let mut mean = 0.0;
    let mut second = 0.0;
    for i in 0..n {
        let x = lo + i as f64 * h;
        let mut logf = 0.0;
        for q in quotes.iter().flatten() {
            let wt = eta * q.w_tilde;
            logf += -(q.x_tilde - x).powi(2) / (2.0 * wt * wt)
                - (std::f64::consts::TAU.sqrt() * eta * q.width).ln();
        }
        let f = logf.exp();
        let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        mass += w * f;
        mean += w * f * x;
        second += w * f * x * x;
    }
    mass *= h;
    mean = mean * h / mass;
    second = second * h / mass;
    let var = second - mean * mean;

    assert_abs_diff_eq!(out.mean, mean, epsilon = 1e-8);
    assert_abs_diff_eq!(out.var, var, epsilon = 1e-8);
    // Total mass: kernel log-mass plus the truncation integral.
    let total = out.loglik + out.log_kernel_mass();
    assert_abs_diff_eq!(total, mass.ln(), epsilon = 1e-8);
}

#[test]
fn posterior_variance_never_increases() {
    let mut state = FilterState::diffuse(FilterMode::Truncated);
    state = measurement_update(&state, &meas(vec![quote(0.8, 0.05, 0.002)]), 1.2).unwrap();
    let mut var = state.var;
    for (x, w) in [(0.75, 0.08), (0.9, 0.2), (0.6, 0.5), (0.82, 1.5)] {
        state = measurement_update(&state, &meas(vec![quote(x, w, 0.001)]), 1.2).unwrap();
        assert!(state.var <= var + 1e-15, "variance rose from {var} to {}", state.var);
        var = state.var;
    }
}

#[test]
fn predict_far_from_barrier_is_gaussian_convolution() {
    // Brownian spec far from the barrier: the predictive is the plain
    // Gaussian convolution with drift beta sigma^2 dt and variance sigma^2 dt.
    let spec = TimeChangeSpec::brownian();
    let params = TcbmParams::new(2.0, 0.3, -0.5).unwrap();
    let dt = 1.0 / 52.0;
    for mode in [FilterMode::Truncated, FilterMode::Kalman] {
        let state = FilterState { mean: 2.0, var: 0.0016, loglik: 0.0, mode };
        let out = predict_step(&state, &spec, &params, dt).unwrap();
        assert_abs_diff_eq!(out.mean, 2.0 - 0.5 * 0.09 * dt, epsilon = 1e-6);
        assert_abs_diff_eq!(out.var, 0.0016 + 0.09 * dt, epsilon = 1e-6);
        // Survival factor is a log-mass decrement, essentially zero here.
        assert!(out.loglik <= 1e-9 && out.loglik > -1e-6);
    }
}

#[test]
fn predict_matches_two_dimensional_quadrature() {
    // One full predictive step on the VG spec against brute-force double
    // quadrature of the inductive integral over a fine (x, y) grid.
    let spec = TimeChangeSpec::vg(0.2, 1.039).unwrap();
    let params = TcbmParams::new(0.5, 0.3, -0.5).unwrap();
    let dt = 1.0 / 52.0;
    let (m_bar, v_bar) = (0.45, 0.0025); // near-barrier on purpose
    let state = FilterState { mean: m_bar, var: v_bar, loglik: 0.0, mode: FilterMode::Truncated };
    let out = predict_step(&state, &spec, &params, dt).unwrap();
    // Recover (m0, m1, m2) from the state transition.
    let (m1_f, m2_f) = truncnorm::truncated_moments(out.mean, out.var.sqrt());
    let m0_f = (out.loglik + norm_cdf(out.mean / out.var.sqrt()).ln()).exp();

    // Oracle: fine-grid integration with the transition kernel.
    let grid = crate::firstpassage::FftGrid::with_u_bar(1 << 13, 2400.0).unwrap();
    let kernel = TransitionKernel::new(&spec, &params, dt, &grid).unwrap();
    let h = grid.eta_star();
    let sd = v_bar.sqrt();
    let x_lo = (m_bar - 8.0 * sd).max(h);
    let x_hi = m_bar + 8.0 * sd;
    let mut m0 = 0.0;
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    let steps = 1600;
    let hx = (x_hi - x_lo) / steps as f64;
    for i in 0..=steps {
        let x = x_lo + i as f64 * hx;
        let kappa = norm_pdf((x - m_bar) / sd) / sd;
        let row = kernel.joint_density_row(x);
        let (mut p, mut y1, mut y2) = (0.0, 0.0, 0.0);
        for (l, &q) in row.iter().enumerate() {
            let y = grid.x(l);
            p += q;
            y1 += y * q;
            y2 += y * y * q;
        }
        let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
        m0 += w * kappa * p * h;
        m1 += w * kappa * y1 * h;
        m2 += w * kappa * y2 * h;
    }
    m0 *= hx;
    m1 = m1 * hx / m0;
    m2 = m2 * hx / m0;

    assert_relative_eq!(m0_f, m0, max_relative = 1e-4);
    assert_relative_eq!(m1_f, m1, max_relative = 1e-4);
    assert_relative_eq!(m2_f, m2, max_relative = 1e-4);
}

#[test]
fn truncated_and_kalman_agree_far_from_barrier() {
    let spec = TimeChangeSpec::vg(0.2, 1.039).unwrap();
    let params = TcbmParams::new(1.0, 0.3, -0.5).unwrap();
    let dt = 1.0 / 52.0;
    let predictor = Predictor::new(&spec, &params, dt, 3.0).unwrap();
    let quotes = vec![quote(0.95, 0.03, 0.001), quote(1.02, 0.05, 0.001)];
    let mut tstate = FilterState::diffuse(FilterMode::Truncated);
    let mut kstate = FilterState::diffuse(FilterMode::Kalman);
    for _ in 0..10 {
        tstate = measurement_update(&tstate, &meas(quotes.clone()), 1.5).unwrap();
        kstate = measurement_update(&kstate, &meas(quotes.clone()), 1.5).unwrap();
        assert!(tstate.mean > 4.0 * tstate.var.sqrt());
        tstate = predictor.step(&tstate).unwrap();
        kstate = predictor.step(&kstate).unwrap();
    }
    let lt = tstate.loglik + tstate.log_kernel_mass();
    let lk = kstate.loglik + kstate.log_kernel_mass();
    assert_relative_eq!(lt, lk, max_relative = 1e-3);
}

fn tiny_panel(
    config: &ModelConfig,
    theta: &Theta,
    xs: &[f64],
) -> (CdsPanel, Vec<ZeroCurve>) {
    // Quotes generated from the model itself at the given path, with a
    // fixed 10% relative width and deterministic perturbations.
    let asof = NaiveDate::from_ymd_opt(2006, 1, 4).unwrap();
    let curve = ZeroCurve::flat(asof, 0.03);
    let spec = config.spec(theta).unwrap();
    let params_q = config.params_q(1.0, theta).unwrap();
    let pricer =
        CdsPricer::new(&spec, &params_q, &config.grid, config.premium_dt, config.max_tenor())
            .unwrap();
    let contracts: Vec<CdsContractSpec> = config
        .tenors
        .iter()
        .map(|&t| CdsContractSpec::new(t, config.premium_dt, theta.recovery).unwrap())
        .collect();
    let mut rows = Vec::new();
    for (t, &x) in xs.iter().enumerate() {
        let curves_k = pricer.spread_curves(&contracts, &curve).unwrap();
        let mut mid = Vec::new();
        let mut width = Vec::new();
        for (k, sc) in curves_k.iter().enumerate() {
            let f = sc.at(x).unwrap();
            let w = (0.1 * f).max(2e-4);
            // deterministic 'noise', alternating sign
            let bump = 0.3 * w * if (t + k) % 2 == 0 { 1.0 } else { -1.0 };
            mid.push(Some(f + bump));
            width.push(Some(w));
        }
        rows.push(PanelRow {
            date: asof + chrono::Duration::days(7 * t as i64),
            mid,
            width,
            no_default: true,
        });
    }
    let panel = CdsPanel::new(config.tenors.clone(), rows).unwrap();
    let curves = vec![curve; xs.len()];
    (panel, curves)
}

#[test]
fn single_date_filter_is_the_fusion_constant() {
    let config = ModelConfig::with_kind(ModelKind::Vg);
    let theta = Theta { c: 1.0, beta_q: -1.5, recovery: 0.6, eta: 1.5 };
    let (panel, curves) = tiny_panel(&config, &theta, &[0.7]);
    let run = run_filter(&panel, &curves, &config, &theta, FilterMode::Truncated).unwrap();
    let m = &transform_panel(&panel, &curves, &config, &theta).unwrap()[0];
    let fused =
        measurement_update(&FilterState::diffuse(FilterMode::Truncated), m, theta.eta).unwrap();
    let expected = fused.loglik + fused.log_kernel_mass();
    assert_relative_eq!(run.loglik, expected, epsilon = 1e-12);
    assert_eq!(run.weekly.len(), 1);
    assert_relative_eq!(run.weekly[0], expected, epsilon = 1e-12);
}

#[test]
fn weekly_increments_sum_to_total() {
    let config = ModelConfig::with_kind(ModelKind::Vg);
    let theta = Theta { c: 1.0, beta_q: -1.5, recovery: 0.6, eta: 1.5 };
    let xs = [0.7, 0.69, 0.72, 0.68, 0.71, 0.70];
    let (panel, curves) = tiny_panel(&config, &theta, &xs);
    for mode in [FilterMode::Truncated, FilterMode::Kalman] {
        let run = run_filter(&panel, &curves, &config, &theta, mode).unwrap();
        let sum: f64 = run.weekly.iter().sum();
        assert_relative_eq!(sum, run.loglik, epsilon = 1e-10);
        assert_eq!(run.states.len(), xs.len());
    }
}

#[test]
fn filtered_path_falls_when_credit_worsens() {
    let config = ModelConfig::with_kind(ModelKind::Vg);
    let theta = Theta { c: 1.0, beta_q: -1.5, recovery: 0.6, eta: 1.5 };
    let xs = [0.7, 0.7, 0.7, 0.7];
    let (panel, curves) = tiny_panel(&config, &theta, &xs);
    let run = run_filter(&panel, &curves, &config, &theta, FilterMode::Truncated).unwrap();

    // Scale all quotes up 30%: credit worsens, x-hat must drop everywhere.
    let rows: Vec<PanelRow> = panel
        .rows()
        .iter()
        .map(|r| PanelRow {
            date: r.date,
            mid: r.mid.iter().map(|m| m.map(|v| v * 1.3)).collect(),
            width: r.width.clone(),
            no_default: r.no_default,
        })
        .collect();
    let worse = CdsPanel::new(panel.tenors().to_vec(), rows).unwrap();
    let run_worse = run_filter(&worse, &curves, &config, &theta, FilterMode::Truncated).unwrap();
    for (a, b) in run.x_mode.iter().zip(run_worse.x_mode.iter()) {
        assert!(b < a, "x-hat should fall when quotes rise ({b} !< {a})");
    }
}

#[test]
fn predictive_mass_is_a_survival_discount() {
    // Every predictive step multiplies the likelihood by a factor <= 1.
    let config = ModelConfig::with_kind(ModelKind::Vg);
    let theta = Theta { c: 1.0, beta_q: -1.5, recovery: 0.6, eta: 1.5 };
    let spec = config.spec(&theta).unwrap();
    let params = config.params_p(1.0).unwrap();
    let predictor = Predictor::new(&spec, &params, 1.0 / 52.0, 3.0).unwrap();
    for &(m, v) in &[(0.1, 0.0025), (0.3, 0.01), (0.8, 0.0004), (2.0, 0.04)] {
        let state = FilterState { mean: m, var: v, loglik: 0.0, mode: FilterMode::Truncated };
        let out = predictor.step(&state).unwrap();
        // Survival factor = ratio of total masses before and after.
        let factor = (out.loglik + out.log_kernel_mass())
            - (state.loglik + state.log_kernel_mass());
        assert!(
            factor <= 1e-12,
            "predictive mass factor exceeded 1 at (m, v) = ({m}, {v}): {factor}"
        );
    }
}

#[test]
fn naive_measurement_density_peaks_at_the_truth() {
    let config = ModelConfig::with_kind(ModelKind::Vg);
    let theta = Theta { c: 1.0, beta_q: -1.5, recovery: 0.6, eta: 1.5 };
    let xs = [0.7, 0.71, 0.69];
    let (panel, curves) = tiny_panel(&config, &theta, &xs);
    let at_truth =
        naive_measurement_loglik(&panel, &curves, &config, &theta, &xs).unwrap();
    let shifted: Vec<f64> = xs.iter().map(|x| x + 0.05).collect();
    let off = naive_measurement_loglik(&panel, &curves, &config, &theta, &shifted).unwrap();
    assert!(at_truth > off);
}
