//! VaR backtesting: breach indicators, breach frequency and the
//! likelihood-ratio coverage tests (Kupiec unconditional coverage,
//! Christoffersen independence, and their sum, conditional coverage).
//!
//! Likelihoods are evaluated in logs with the convention `0·ln 0 = 0`.
//! The independence test is undefined when the indicator never leaves one
//! state's row of the transition table (no transitions out of state 0, or
//! none out of state 1); callers get `None` rather than NaN.

use std::io::Write;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RiskError};
use crate::mathstat::chi2_sf;
use crate::var_engine::VarSeries;

/// Exceedance indicators `I_t = 1` iff `R_t < VaR_t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BreachSeries {
    pub dates: Vec<NaiveDate>,
    pub indicator: Vec<u8>,
}

impl BreachSeries {
    pub fn len(&self) -> usize {
        self.indicator.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indicator.is_empty()
    }

    pub fn count(&self) -> usize {
        self.indicator.iter().map(|&i| i as usize).sum()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["date", "indicator"])?;
        for (d, i) in self.dates.iter().zip(&self.indicator) {
            wtr.write_record([d.format("%Y-%m-%d").to_string(), i.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

pub fn breaches(var_series: &VarSeries) -> Result<BreachSeries> {
    let n = var_series.var.len();
    if var_series.realized.len() != n || var_series.dates.len() != n {
        return Err(RiskError::Alignment(format!(
            "{} realized returns, {} VaR values, {} dates",
            var_series.realized.len(),
            n,
            var_series.dates.len()
        )));
    }
    let indicator = var_series
        .realized
        .iter()
        .zip(&var_series.var)
        .map(|(r, v)| u8::from(r < v))
        .collect();
    Ok(BreachSeries {
        dates: var_series.dates.clone(),
        indicator,
    })
}

pub fn breach_frequency(b: &BreachSeries) -> Result<f64> {
    if b.is_empty() {
        return Err(RiskError::Domain("breach frequency of an empty series".into()));
    }
    Ok(b.count() as f64 / b.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TransitionCounts {
    pub n00: u64,
    pub n01: u64,
    pub n10: u64,
    pub n11: u64,
}

impl TransitionCounts {
    pub fn total(&self) -> u64 {
        self.n00 + self.n01 + self.n10 + self.n11
    }
}

/// Counts of consecutive pairs `(I_{t−1}, I_t)`.
pub fn transition_counts(indicator: &[u8]) -> Result<TransitionCounts> {
    if indicator.len() < 2 {
        return Err(RiskError::Domain("need at least two indicators for transitions".into()));
    }
    let mut c = TransitionCounts::default();
    for w in indicator.windows(2) {
        match (w[0], w[1]) {
            (0, 0) => c.n00 += 1,
            (0, 1) => c.n01 += 1,
            (1, 0) => c.n10 += 1,
            (1, 1) => c.n11 += 1,
            _ => return Err(RiskError::Domain("indicators must be 0 or 1".into())),
        }
    }
    Ok(c)
}

/// A likelihood-ratio statistic and its chi-square p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrTest {
    pub stat: f64,
    pub p_value: f64,
}

/// `x·ln(y)` with `0·ln 0 = 0`.
fn xlny(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

/// `−2(ln L₀ − ln L₁)`, with rounding-level negatives clamped to zero.
fn lr_stat(ln_l0: f64, ln_l1: f64) -> f64 {
    let stat = -2.0 * (ln_l0 - ln_l1);
    if stat < 0.0 && stat > -1e-12 * (1.0 + ln_l1.abs()) {
        0.0
    } else {
        stat
    }
}

/// Christoffersen independence test. `Ok(None)` when one of the states has
/// no outgoing transitions.
pub fn lr_independence(c: &TransitionCounts) -> Result<Option<LrTest>> {
    let total = c.total();
    if total == 0 {
        return Err(RiskError::Domain("no transitions".into()));
    }
    let from0 = c.n00 + c.n01;
    let from1 = c.n10 + c.n11;
    if from0 == 0 || from1 == 0 {
        return Ok(None);
    }
    let (n00, n01, n10, n11) = (c.n00 as f64, c.n01 as f64, c.n10 as f64, c.n11 as f64);
    let p = (n01 + n11) / total as f64;
    let pi0 = n01 / from0 as f64;
    let pi1 = n11 / from1 as f64;

    let ln_l0 = xlny(n00 + n10, 1.0 - p) + xlny(n01 + n11, p);
    let ln_l1 = xlny(n00, 1.0 - pi0) + xlny(n01, pi0) + xlny(n10, 1.0 - pi1) + xlny(n11, pi1);
    let stat = lr_stat(ln_l0, ln_l1);
    Ok(Some(LrTest {
        stat,
        p_value: chi2_sf(stat, 1)?,
    }))
}

/// Kupiec proportion-of-failures test of `breach_count` breaches in
/// `n_obs` days against nominal rate `alpha`.
pub fn lr_unconditional(breach_count: u64, n_obs: u64, alpha: f64) -> Result<LrTest> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(RiskError::Domain(format!("alpha {alpha} outside (0, 1)")));
    }
    if n_obs == 0 || breach_count > n_obs {
        return Err(RiskError::Domain(format!(
            "breach count {breach_count} inconsistent with {n_obs} observations"
        )));
    }
    let x = breach_count as f64;
    let t = n_obs as f64;
    let p_hat = x / t;
    let ln_null = xlny(t - x, 1.0 - alpha) + xlny(x, alpha);
    let ln_alt = xlny(t - x, 1.0 - p_hat) + xlny(x, p_hat);
    let stat = lr_stat(ln_null, ln_alt);
    Ok(LrTest {
        stat,
        p_value: chi2_sf(stat, 1)?,
    })
}

/// `LR_cc = LR_uc + LR_ind` against χ²(2); `None` if either part is
/// undefined.
pub fn lr_conditional(uc: Option<f64>, ind: Option<f64>) -> Result<Option<LrTest>> {
    match (uc, ind) {
        (Some(u), Some(i)) => {
            let stat = u + i;
            Ok(Some(LrTest {
                stat,
                p_value: chi2_sf(stat, 2)?,
            }))
        }
        _ => Ok(None),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub level: f64,
    pub n_obs: usize,
    pub breach_count: usize,
    pub frequency: f64,
    pub transitions: TransitionCounts,
    pub lr_uc: Option<f64>,
    pub p_uc: Option<f64>,
    pub lr_ind: Option<f64>,
    pub p_ind: Option<f64>,
    pub lr_cc: Option<f64>,
    pub p_cc: Option<f64>,
}

impl CoverageReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Runs the full test battery on one breach series at nominal `level`.
pub fn coverage_report(b: &BreachSeries, level: f64) -> Result<CoverageReport> {
    let frequency = breach_frequency(b)?;
    let transitions = transition_counts(&b.indicator)?;
    let uc = lr_unconditional(b.count() as u64, b.len() as u64, level)?;
    let ind = lr_independence(&transitions)?;
    let cc = lr_conditional(Some(uc.stat), ind.map(|t| t.stat))?;
    Ok(CoverageReport {
        level,
        n_obs: b.len(),
        breach_count: b.count(),
        frequency,
        transitions,
        lr_uc: Some(uc.stat),
        p_uc: Some(uc.p_value),
        lr_ind: ind.map(|t| t.stat),
        p_ind: ind.map(|t| t.p_value),
        lr_cc: cc.map(|t| t.stat),
        p_cc: cc.map(|t| t.p_value),
    })
}
