//! Weekly CDS quote panels: per-date, per-tenor mid quotes and bid/ask
//! widths. Spreads are stored as decimals per annum; file formats convert
//! to and from basis points at the I/O boundary.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TcbmError};

/// The default quoted tenor set, in years.
pub const DEFAULT_TENORS: [f64; 7] = [1.0, 2.0, 3.0, 4.0, 5.0, 7.0, 10.0];

/// One date's quotes across the tenor set. `None` marks a missing quote.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PanelRow {
    pub date: NaiveDate,
    /// Mid quotes per tenor, decimals per annum.
    pub mid: Vec<Option<f64>>,
    /// Bid/ask widths per tenor (ask - bid), decimals per annum.
    pub width: Vec<Option<f64>>,
    /// Whether the firm was observed alive on this date.
    pub no_default: bool,
}

/// A time-indexed panel of CDS term structures.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CdsPanel {
    tenors: Vec<f64>,
    rows: Vec<PanelRow>,
}

impl CdsPanel {
    /// Assemble a panel, validating date ordering and quote sanity.
    pub fn new(tenors: Vec<f64>, rows: Vec<PanelRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(TcbmError::InvalidData("empty panel".into()));
        }
        if tenors.is_empty() || tenors.windows(2).any(|w| w[1] <= w[0]) {
            return Err(TcbmError::InvalidData(
                "tenor set must be nonempty and strictly increasing".into(),
            ));
        }
        for row in &rows {
            if row.mid.len() != tenors.len() || row.width.len() != tenors.len() {
                return Err(TcbmError::InvalidData(format!(
                    "row {} has wrong tenor count",
                    row.date
                )));
            }
            for (k, (m, w)) in row.mid.iter().zip(row.width.iter()).enumerate() {
                match (m, w) {
                    (Some(m), Some(w)) => {
                        if !(*m > 0.0) || !(*w > 0.0) {
                            return Err(TcbmError::InvalidData(format!(
                                "nonpositive quote or width on {} tenor {}",
                                row.date, tenors[k]
                            )));
                        }
                    }
                    (None, None) => {}
                    _ => {
                        return Err(TcbmError::InvalidData(format!(
                            "mid/width must be present together on {} tenor {}",
                            row.date, tenors[k]
                        )));
                    }
                }
            }
        }
        if rows.windows(2).any(|w| w[1].date <= w[0].date) {
            return Err(TcbmError::InvalidData("panel dates must strictly increase".into()));
        }
        Ok(CdsPanel { tenors, rows })
    }

    pub fn tenors(&self) -> &[f64] {
        &self.tenors
    }

    pub fn rows(&self) -> &[PanelRow] {
        &self.rows
    }

    /// Number of dates M.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Number of tenors K.
    pub fn n_tenors(&self) -> usize {
        self.tenors.len()
    }
}
