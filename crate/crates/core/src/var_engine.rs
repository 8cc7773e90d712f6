//! Rolling one-day VaR by historical simulation (HS), GARCH with normal
//! innovations (GARCH-N) and filtered historical simulation (FHS).
//!
//! For each date `t ≥ m` the forecast uses only information before `t`:
//! the HS window is `R_{t−m}..R_{t−1}`, the FHS window `z_{t−m}..z_{t−1}`.
//! GARCH-N and FHS scale by the in-sample filtered σ_t, which for given
//! parameters and starting variance depends only on returns before `t`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::data::{slice_window, ReturnSeries};
use crate::error::{Result, RiskError};
use crate::garch::GarchFit;
use crate::mathstat::{empirical_quantile, norm_inv_cdf};

pub const DEFAULT_WINDOW: usize = 200;
const MIN_WINDOW: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VarMethod {
    #[serde(rename = "hs")]
    Hs,
    #[serde(rename = "garch-n")]
    GarchNormal,
    #[serde(rename = "fhs")]
    Fhs,
}

impl VarMethod {
    pub const ALL: [VarMethod; 3] = [VarMethod::Hs, VarMethod::GarchNormal, VarMethod::Fhs];

    pub fn name(self) -> &'static str {
        match self {
            VarMethod::Hs => "hs",
            VarMethod::GarchNormal => "garch-n",
            VarMethod::Fhs => "fhs",
        }
    }

    /// Column name in VaR tables.
    pub fn column(self) -> &'static str {
        match self {
            VarMethod::Hs => "var_hs",
            VarMethod::GarchNormal => "var_garch_n",
            VarMethod::Fhs => "var_fhs",
        }
    }

    pub fn needs_fit(self) -> bool {
        !matches!(self, VarMethod::Hs)
    }
}

impl fmt::Display for VarMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for VarMethod {
    type Err = RiskError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hs" => Ok(VarMethod::Hs),
            "garch-n" => Ok(VarMethod::GarchNormal),
            "fhs" => Ok(VarMethod::Fhs),
            other => Err(RiskError::Config(format!("unknown VaR method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarConfig {
    pub level: f64,
    pub window: usize,
    pub method: VarMethod,
}

impl VarConfig {
    pub fn new(level: f64, window: usize, method: VarMethod) -> Result<Self> {
        let cfg = Self { level, window, method };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.level > 0.0 && self.level < 0.5) {
            return Err(RiskError::Config(format!("level {} outside (0, 0.5)", self.level)));
        }
        if self.window < MIN_WINDOW {
            return Err(RiskError::Config(format!(
                "window {} shorter than {MIN_WINDOW}",
                self.window
            )));
        }
        Ok(())
    }
}

/// HS VaR at `t`: empirical quantile of the `m` raw returns before `t`.
pub fn hs_var(returns: &[f64], t: usize, cfg: &VarConfig) -> Result<f64> {
    empirical_quantile(slice_window(returns, t, cfg.window)?, cfg.level)
}

/// σ_t·Φ⁻¹(p).
pub fn garch_normal_var(sigma_t: f64, p: f64) -> Result<f64> {
    check_sigma(sigma_t)?;
    Ok(sigma_t * norm_inv_cdf(p)?)
}

/// σ_t times the empirical p-quantile of past standardized residuals.
pub fn fhs_var(sigma_t: f64, z_window: &[f64], p: f64) -> Result<f64> {
    check_sigma(sigma_t)?;
    Ok(sigma_t * empirical_quantile(z_window, p)?)
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(RiskError::Domain(format!("volatility {sigma} must be positive")))
    }
}

/// Per-date VaR forecasts for one method and level, starting at index `m`
/// of the source series.
#[derive(Debug, Clone, PartialEq)]
pub struct VarSeries {
    pub dates: Vec<NaiveDate>,
    pub realized: Vec<f64>,
    pub var: Vec<f64>,
    pub method: VarMethod,
    pub level: f64,
    pub window: usize,
}

impl VarSeries {
    pub fn len(&self) -> usize {
        self.var.len()
    }

    pub fn is_empty(&self) -> bool {
        self.var.is_empty()
    }
}

pub fn rolling_var(series: &ReturnSeries, fit: Option<&GarchFit>, cfg: &VarConfig) -> Result<VarSeries> {
    cfg.validate()?;
    let m = cfg.window;
    let returns = series.returns();
    let n = returns.len();
    if n <= m {
        return Err(RiskError::Data(format!(
            "series of length {n} is not longer than the window {m}"
        )));
    }

    let fit = if cfg.method.needs_fit() {
        let fit = fit.ok_or_else(|| {
            RiskError::Config(format!("method {} requires a GARCH fit", cfg.method))
        })?;
        if fit.sigma.len() != n || fit.z.len() != n {
            return Err(RiskError::Alignment(format!(
                "fit covers {} observations but the series has {n}",
                fit.sigma.len()
            )));
        }
        Some(fit)
    } else {
        None
    };

    let var = (m..n)
        .map(|t| match (cfg.method, fit) {
            (VarMethod::Hs, _) => hs_var(returns, t, cfg),
            (VarMethod::GarchNormal, Some(f)) => garch_normal_var(f.sigma[t], cfg.level),
            (VarMethod::Fhs, Some(f)) => fhs_var(f.sigma[t], &f.z[t - m..t], cfg.level),
            _ => unreachable!("fit presence checked above"),
        })
        .collect::<Result<Vec<f64>>>()?;

    Ok(VarSeries {
        dates: series.dates()[m..].to_vec(),
        realized: returns[m..].to_vec(),
        var,
        method: cfg.method,
        level: cfg.level,
        window: m,
    })
}

/// Writes `date,return,<var columns…>` for VaR series sharing dates and
/// realized returns, one VaR column per series in the given order.
pub fn write_var_table<W: Write>(series: &[VarSeries], writer: W) -> Result<()> {
    let first = series
        .first()
        .ok_or_else(|| RiskError::Config("no VaR series to write".into()))?;
    if series[1..]
        .iter()
        .any(|s| s.dates != first.dates || s.realized != first.realized)
    {
        return Err(RiskError::Alignment("VaR series do not share dates".into()));
    }
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["date", "return"];
    header.extend(series.iter().map(|s| s.method.column()));
    wtr.write_record(&header)?;
    for i in 0..first.len() {
        let mut row = vec![
            first.dates[i].format("%Y-%m-%d").to_string(),
            first.realized[i].to_string(),
        ];
        row.extend(series.iter().map(|s| s.var[i].to_string()));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}
