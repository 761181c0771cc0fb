//! Vuong likelihood-ratio comparison of two models on the same panel,
//! with a Newey-West HAC variance for the weekly log-likelihood
//! differences.

use serde::Serialize;

use crate::error::{Result, TcbmError};

/// Outcome of a Vuong comparison.
#[derive(Debug, Clone, Serialize)]
pub struct VuongReport {
    /// Sum of the weekly log-likelihood differences.
    pub lambda: f64,
    /// HAC standard deviation of the difference series.
    pub s_hat: f64,
    /// `lambda / (s_hat·sqrt(M))`; asymptotically N(0,1) when the models
    /// are equivalent.
    pub statistic: f64,
    /// Number of weeks.
    pub m: usize,
    /// Newey-West lag actually used.
    pub lag: usize,
    /// Weekly series of model i and model j.
    pub series_i: Vec<f64>,
    pub series_j: Vec<f64>,
}

/// Bartlett-kernel Newey-West lag rule `floor(4·(M/100)^{2/9})`.
pub fn newey_west_lag(m: usize) -> usize {
    (4.0 * (m as f64 / 100.0).powf(2.0 / 9.0)).floor() as usize
}

/// HAC (Newey-West, Bartlett weights) variance of a series around its
/// mean.
pub fn newey_west_variance(series: &[f64], lag: usize) -> f64 {
    let m = series.len();
    let mean = series.iter().sum::<f64>() / m as f64;
    let centered: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let gamma = |k: usize| -> f64 {
        (k..m).map(|t| centered[t] * centered[t - k]).sum::<f64>() / m as f64
    };
    let mut var = gamma(0);
    for k in 1..=lag.min(m - 1) {
        let w = 1.0 - k as f64 / (lag as f64 + 1.0);
        var += 2.0 * w * gamma(k);
    }
    var
}

/// Compare two weekly log-likelihood series of equal length `M >= 20`.
pub fn vuong_test(series_i: &[f64], series_j: &[f64]) -> Result<VuongReport> {
    if series_i.len() != series_j.len() {
        return Err(TcbmError::domain("series lengths differ"));
    }
    let m = series_i.len();
    if m < 20 {
        return Err(TcbmError::domain(format!("need at least 20 weeks, got {m}")));
    }
    let diffs: Vec<f64> = series_i.iter().zip(series_j.iter()).map(|(a, b)| a - b).collect();
    let lambda: f64 = diffs.iter().sum();
    let lag = newey_west_lag(m);
    let var = newey_west_variance(&diffs, lag);
    if !(var > 0.0) {
        return Err(TcbmError::numerical(format!(
            "degenerate difference series (HAC variance {var})"
        )));
    }
    let s_hat = var.sqrt();
    Ok(VuongReport {
        lambda,
        s_hat,
        statistic: lambda / (s_hat * (m as f64).sqrt()),
        m,
        lag,
        series_i: series_i.to_vec(),
        series_j: series_j.to_vec(),
    })
}
