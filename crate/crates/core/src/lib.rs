//! Market-risk engine: one-day and multi-day Value-at-Risk / Expected
//! Shortfall by historical simulation, GARCH(1,1) with normal innovations
//! and filtered historical simulation, plus coverage backtests and
//! variance-decomposition connectedness for multivariate systems.
//!
//! Sign convention: VaR and ES are stored as signed return quantiles, so a
//! 5% VaR is normally a negative number.

pub mod backtest;
pub mod connectedness;
pub mod data;
pub mod error;
pub mod garch;
pub mod mathstat;
pub mod montecarlo;
mod optim;
pub mod var_engine;

pub use error::{Result, RiskError};
