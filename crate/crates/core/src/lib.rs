//! Structural credit models driven by time-changed Brownian motion.
//!
//! The log-leverage ratio of a firm follows `X_t = x + sigma·W_{G_t} +
//! beta·sigma^2·G_t` with a Lévy time change `G` and default at the first
//! time the clock passes the Brownian barrier-crossing level. The crate
//! prices survival probabilities and CDS spreads on FFT lattices, inverts
//! quoted spreads into direct observations of the hidden log-leverage, and
//! estimates model parameters from weekly CDS term-structure panels with a
//! truncated-normal (or Kalman) moment-matching filter.

pub mod error;
pub mod estimation;
pub mod filter;
pub mod firstpassage;
pub mod math;
pub mod model;
pub mod panel;
pub mod pricing;
pub mod timechange;

pub use error::{Result, TcbmError};
pub use filter::{FilterMode, FilterState};
pub use firstpassage::{FftGrid, SurvivalCurve, TcbmParams};
pub use model::{FrozenParams, ModelConfig, ModelKind, Theta, ThetaBounds};
pub use panel::CdsPanel;
pub use pricing::{CdsContractSpec, ZeroCurve};
pub use timechange::{TimeChangeKind, TimeChangeSpec};
