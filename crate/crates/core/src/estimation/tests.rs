use approx::{assert_abs_diff_eq, assert_relative_eq};
use chrono::NaiveDate;

use super::*;
use crate::filter::{measurement_update, FilterState, MeasurementVector, TransformedQuote};
use crate::panel::{CdsPanel, PanelRow};

fn date(s: &str) -> NaiveDate {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
}

#[test]
fn rmse_trivial_cases() {
    // Hand-built 2x2 panel against an explicit model evaluation is
    // exercised in the integration tests; here the pure arithmetic:
    // perfect fit -> 0 and exactly one bid/ask unit of error -> 1.
    let config = ModelConfig::with_kind(ModelKind::Vg);
    let theta = Theta { c: 1.0, beta_q: -1.5, recovery: 0.6, eta: 1.0 };
    let sim = SimulationSpec::new(config.clone(), theta, 0.7, 2);
    let mut out = simulate_panel(&sim, 3).unwrap();

    // Rewrite the quotes as exactly the model values (perfect fit), then
    // as the model values shifted by exactly one width.
    let spec = config.spec(&theta).unwrap();
    let params_q = config.params_q(1.0, &theta).unwrap();
    let pricer = crate::pricing::CdsPricer::new(
        &spec,
        &params_q,
        &config.grid,
        config.premium_dt,
        config.max_tenor(),
    )
    .unwrap();
    let contracts: Vec<CdsContractSpec> = config
        .tenors
        .iter()
        .map(|&t| CdsContractSpec::new(t, config.premium_dt, theta.recovery).unwrap())
        .collect();
    let mut rows_perfect = Vec::new();
    let mut rows_one_unit = Vec::new();
    for (t, row) in out.panel.rows().iter().enumerate() {
        let curves_k = pricer.spread_curves(&contracts, &out.curves[t]).unwrap();
        let mut mid_p = Vec::new();
        let mut mid_u = Vec::new();
        let width: Vec<Option<f64>> = row.width.clone();
        for (k, sc) in curves_k.iter().enumerate() {
            let f = sc.at(out.x_true[t]).unwrap();
            mid_p.push(Some(f));
            mid_u.push(Some(f + width[k].unwrap()));
        }
        rows_perfect.push(PanelRow {
            date: row.date,
            mid: mid_p,
            width: width.clone(),
            no_default: true,
        });
        rows_one_unit.push(PanelRow { date: row.date, mid: mid_u, width, no_default: true });
    }
    let perfect = CdsPanel::new(config.tenors.clone(), rows_perfect).unwrap();
    let one_unit = CdsPanel::new(config.tenors.clone(), rows_one_unit).unwrap();
    let r0 = rmse(&perfect, &out.curves, &config, &theta, &out.x_true).unwrap();
    let r1 = rmse(&one_unit, &out.curves, &config, &theta, &out.x_true).unwrap();
    assert_abs_diff_eq!(r0, 0.0, epsilon = 1e-12);
    assert_abs_diff_eq!(r1, 1.0, epsilon = 1e-12);
    out.x_true.clear(); // silence unused-mut lint on some toolchains
}

#[test]
fn weekly_kalman_sums_to_the_filter_total() {
    let config = ModelConfig::with_kind(ModelKind::Exp);
    let theta = Theta { c: 2.2, beta_q: -1.4, recovery: 0.6, eta: 1.5 };
    let sim = SimulationSpec::new(config.clone(), theta, 0.7, 8);
    let out = simulate_panel(&sim, 11).unwrap();
    let weekly = weekly_loglik_kalman(&out.panel, &out.curves, &config, &theta).unwrap();
    let run = run_filter(&out.panel, &out.curves, &config, &theta, FilterMode::Kalman).unwrap();
    assert_relative_eq!(weekly.iter().sum::<f64>(), run.loglik, epsilon = 1e-8);
    assert_eq!(weekly.len(), out.panel.len());
}

/// Joint-innovation form of one date's measurement log-density:
/// `-K/2 ln 2pi - 1/2 ln|P| - 1/2 r' P^{-1} r - sum ln(w/w_tilde)` with
/// `P = v·11' + diag(d)`, evaluated by the matrix-determinant lemma.
fn innovation_form(m: f64, v: f64, eta: f64, quotes: &[TransformedQuote]) -> f64 {
    let k = quotes.len() as f64;
    let d: Vec<f64> = quotes.iter().map(|q| (eta * q.w_tilde).powi(2)).collect();
    let r: Vec<f64> = quotes.iter().map(|q| q.x_tilde - m).collect();
    let s_inv: f64 = d.iter().map(|di| 1.0 / di).sum();
    let det = d.iter().product::<f64>() * (1.0 + v * s_inv);
    let quad: f64 = {
        let a: f64 = r.iter().zip(d.iter()).map(|(ri, di)| ri * ri / di).sum();
        let b: f64 = r.iter().zip(d.iter()).map(|(ri, di)| ri / di).sum();
        a - v * b * b / (1.0 + v * s_inv)
    };
    let jacobians: f64 = quotes.iter().map(|q| (q.w_tilde / q.width).ln()).sum();
    -0.5 * k * (std::f64::consts::TAU).ln() - 0.5 * det.ln() - 0.5 * quad + jacobians
}

fn seven_quotes(scale: f64) -> Vec<Option<TransformedQuote>> {
    [
        (0.72, 0.031, 0.0017),
        (0.78, 0.044, 0.0015),
        (0.69, 0.052, 0.0013),
        (0.81, 0.060, 0.0012),
        (0.75, 0.071, 0.0011),
        (0.77, 0.085, 0.0010),
        (0.73, 0.104, 0.0009),
    ]
    .iter()
    .map(|&(x, wt, w)| {
        Some(TransformedQuote { x_tilde: x, w_tilde: wt * scale, width: w * scale })
    })
    .collect()
}

#[test]
fn sequential_fusion_equals_the_innovation_form() {
    let eta = 1.5;
    let state =
        FilterState { mean: 0.7, var: 0.0009, loglik: 0.0, mode: FilterMode::Kalman };
    let meas = MeasurementVector { date_index: 3, quotes: seven_quotes(1.0) };
    let fused = measurement_update(&state, &meas, eta).unwrap();
    let expected = innovation_form(
        0.7,
        0.0009,
        eta,
        &meas.quotes.iter().flatten().cloned().collect::<Vec<_>>(),
    );
    assert_relative_eq!(fused.loglik, expected, epsilon = 1e-12);
}

#[test]
fn doubling_widths_shifts_the_prefactors_by_k_log_two() {
    // Net of the Gaussian innovation change, the per-date contribution
    // moves by exactly -K ln 2 when every width doubles.
    let eta = 1.5;
    let state =
        FilterState { mean: 0.7, var: 0.0009, loglik: 0.0, mode: FilterMode::Kalman };
    let base = MeasurementVector { date_index: 0, quotes: seven_quotes(1.0) };
    let doubled = MeasurementVector { date_index: 0, quotes: seven_quotes(2.0) };
    let l1 = measurement_update(&state, &base, eta).unwrap().loglik;
    let l2 = measurement_update(&state, &doubled, eta).unwrap().loglik;
    let q1: Vec<TransformedQuote> = base.quotes.iter().flatten().cloned().collect();
    let q2: Vec<TransformedQuote> = doubled.quotes.iter().flatten().cloned().collect();
    // Innovation parts with the width prefactors stripped:
    let strip = |l: f64, quotes: &[TransformedQuote]| -> f64 {
        l + quotes.iter().map(|q| (std::f64::consts::TAU.sqrt() * eta * q.width).ln()).sum::<f64>()
    };
    let gauss_shift = strip(l2, &q2) - strip(l1, &q1);
    let k = q1.len() as f64;
    assert_relative_eq!(l2 - l1, -k * 2.0_f64.ln() + gauss_shift, epsilon = 1e-12);
    // And the stripped parts really did change (the exponent scale moved).
    assert!(gauss_shift.abs() > 1e-6);
}

#[test]
fn quadratic_variation_annualizes() {
    // Constant weekly step of 0.1 over 53 points: QV = 52·0.01, annualized
    // by 52/(M-1) = 1, so x_std = sqrt(0.52).
    let path: Vec<f64> = (0..53).map(|t| 0.1 * t as f64).collect();
    assert_relative_eq!(
        annualized_quadratic_variation(&path),
        (52.0 * 0.01_f64).sqrt(),
        epsilon = 1e-12
    );
    assert_eq!(annualized_quadratic_variation(&[1.0]), 0.0);
}

#[test]
fn starting_points_stay_in_the_box() {
    let bounds = ThetaBounds::default();
    let init = Theta { c: 1.0, beta_q: -1.0, recovery: 0.5, eta: 1.0 };
    for start in starting_points(&init, &bounds, 5) {
        assert!(bounds.contains(&start), "{start:?} escaped the box");
    }
    assert_eq!(starting_points(&init, &bounds, 1).len(), 1);
}

#[test]
fn information_matrix_of_a_known_gaussian() {
    // Log-likelihood of a synthetic quadratic: I = -H must equal the known
    // curvature and the standard errors its inverse diagonal.
    let theta0 = Theta { c: 1.0, beta_q: -1.5, recovery: 0.6, eta: 1.5 };
    let curv = [4.0, 9.0, 25.0, 1.0];
    let eval = |theta: &Theta| -> crate::error::Result<f64> {
        let d = [
            theta.c - 1.0,
            theta.beta_q + 1.5,
            theta.recovery - 0.6,
            theta.eta - 1.5,
        ];
        Ok(-0.5 * (0..4).map(|i| curv[i] * d[i] * d[i]).sum::<f64>())
    };
    let (info, stderr, pd) =
        observed_information(&eval, &theta0, ModelKind::Vg, 1e-4).unwrap();
    assert!(pd);
    for i in 0..4 {
        assert_relative_eq!(info[i][i], curv[i], max_relative = 1e-5);
        assert_relative_eq!(stderr[i], 1.0 / curv[i].sqrt(), max_relative = 1e-5);
    }
}

#[test]
fn panel_rows_align_with_rmse_inputs() {
    let config = ModelConfig::with_kind(ModelKind::Vg);
    let theta = Theta { c: 1.0, beta_q: -1.5, recovery: 0.6, eta: 1.0 };
    let sim = SimulationSpec::new(config.clone(), theta, 0.7, 3);
    let out = simulate_panel(&sim, 5).unwrap();
    // Mismatched path length must error.
    assert!(rmse(&out.panel, &out.curves, &config, &theta, &[0.7]).is_err());
    let _ = date("2006-01-04");
}
