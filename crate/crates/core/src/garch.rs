//! GARCH(1,1) with zero conditional mean, fitted by Gaussian
//! quasi-maximum likelihood.
//!
//! The variance recursion is
//!
//! ```text
//! σ²_t = ω + α·R²_{t−1} + β·σ²_{t−1}
//! ```
//!
//! and the first variance is backcast as `σ²_1 = ω + (α + β)·s²`, where `s²`
//! is the sample variance of the returns (pre-sample squared return and
//! variance both set to `s²`). With `α = β = 0` every σ²_t equals ω.

use serde::{Deserialize, Serialize};

use crate::error::{Result, RiskError};
use crate::mathstat::{mean, sample_variance};
use crate::optim::{nelder_mead, NelderMeadOptions};

/// Upper bound on `α + β` enforced by the optimizer.
pub const MAX_PERSISTENCE: f64 = 1.0 - 1e-6;

const MIN_FIT_OBS: usize = 250;
const MIN_LOGLIK_OBS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GarchParams {
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl GarchParams {
    pub fn new(omega: f64, alpha: f64, beta: f64) -> Result<Self> {
        let p = Self { omega, alpha, beta };
        p.validate()?;
        Ok(p)
    }

    /// omega > 0, alpha ≥ 0, beta ≥ 0, alpha + beta < 1.
    pub fn validate(&self) -> Result<()> {
        let ok = self.omega > 0.0
            && self.omega.is_finite()
            && self.alpha >= 0.0
            && self.beta >= 0.0
            && self.alpha + self.beta < 1.0;
        if ok {
            Ok(())
        } else {
            Err(RiskError::Parameter(format!(
                "invalid GARCH(1,1) parameters omega={}, alpha={}, beta={}",
                self.omega, self.alpha, self.beta
            )))
        }
    }

    pub fn persistence(&self) -> f64 {
        self.alpha + self.beta
    }

    /// ω / (1 − α − β)
    pub fn unconditional_variance(&self) -> f64 {
        self.omega / (1.0 - self.persistence())
    }
}

/// One-step variance update `ω + α·r² + β·σ²`.
pub fn next_variance(params: &GarchParams, r_t: f64, sigma2_t: f64) -> Result<f64> {
    if !(sigma2_t > 0.0) {
        return Err(RiskError::Domain(format!("variance {sigma2_t} must be positive")));
    }
    Ok(step(params, r_t, sigma2_t))
}

#[inline]
pub(crate) fn step(params: &GarchParams, r: f64, sigma2: f64) -> f64 {
    params.omega + params.alpha * r * r + params.beta * sigma2
}

fn backcast(returns: &[f64], params: &GarchParams) -> f64 {
    let s2 = if returns.len() > 1 {
        sample_variance(returns)
    } else {
        0.0
    };
    params.omega + (params.alpha + params.beta) * s2
}

fn recursion(returns: &[f64], params: &GarchParams, sigma2_first: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(returns.len());
    let mut s2 = sigma2_first;
    for (i, &r) in returns.iter().enumerate() {
        out.push(s2);
        if i + 1 < returns.len() {
            s2 = step(params, r, s2);
        }
    }
    out
}

/// Conditional variances σ²_t for every observation, backcast start.
pub fn variance_path(returns: &[f64], params: &GarchParams) -> Result<Vec<f64>> {
    params.validate()?;
    Ok(recursion(returns, params, backcast(returns, params)))
}

/// Like [`filter`] but with an explicit first variance σ²_1 instead of the
/// backcast. Each σ_t then depends only on returns before `t`.
pub fn filter_from(returns: &[f64], params: &GarchParams, sigma2_first: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    params.validate()?;
    if !(sigma2_first > 0.0) {
        return Err(RiskError::Domain(format!("variance {sigma2_first} must be positive")));
    }
    Ok(split(returns, recursion(returns, params, sigma2_first)))
}

fn split(returns: &[f64], variances: Vec<f64>) -> (Vec<f64>, Vec<f64>) {
    let sigma: Vec<f64> = variances.into_iter().map(f64::sqrt).collect();
    let z = returns.iter().zip(&sigma).map(|(r, s)| r / s).collect();
    (sigma, z)
}

const LN_2PI: f64 = 1.837_877_066_409_345_5;

fn loglik_unchecked(returns: &[f64], params: &GarchParams) -> f64 {
    let mut s2 = backcast(returns, params);
    let mut acc = 0.0;
    for &r in returns {
        acc += -0.5 * (LN_2PI + s2.ln() + r * r / s2);
        s2 = step(params, r, s2);
    }
    acc
}

/// Gaussian log-likelihood `Σ_t [−½ln(2π) − ½ln σ²_t − R²_t/(2σ²_t)]`.
pub fn loglik(returns: &[f64], params: &GarchParams) -> Result<f64> {
    params.validate()?;
    if returns.len() < MIN_LOGLIK_OBS {
        return Err(RiskError::Data(format!(
            "log-likelihood needs at least {MIN_LOGLIK_OBS} observations, got {}",
            returns.len()
        )));
    }
    Ok(loglik_unchecked(returns, params))
}

/// Conditional volatilities σ_t and standardized residuals z_t = R_t/σ_t.
pub fn filter(returns: &[f64], params: &GarchParams) -> Result<(Vec<f64>, Vec<f64>)> {
    Ok(split(returns, variance_path(returns, params)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iter: usize,
    /// Simplex-size tolerance in the optimizer's unconstrained coordinates.
    pub tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iter: 2000,
            tol: 1e-8,
        }
    }
}

/// Fitted parameters plus the series filtered at the optimum.
#[derive(Debug, Clone, PartialEq)]
pub struct GarchFit {
    pub params: GarchParams,
    pub sigma: Vec<f64>,
    pub z: Vec<f64>,
    pub loglik: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// JSON view of a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarchSummary {
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
    pub loglik: f64,
    pub converged: bool,
    pub n_obs: usize,
}

impl GarchFit {
    /// Builds a fit from known parameters, e.g. for simulation studies.
    pub fn from_params(returns: &[f64], params: GarchParams) -> Result<Self> {
        let (sigma, z) = filter(returns, &params)?;
        let loglik = if returns.len() >= MIN_LOGLIK_OBS {
            loglik_unchecked(returns, &params)
        } else {
            f64::NAN
        };
        Ok(Self {
            params,
            sigma,
            z,
            loglik,
            converged: true,
            iterations: 0,
        })
    }

    pub fn n_obs(&self) -> usize {
        self.sigma.len()
    }

    /// The last return, recovered as σ_T·z_T.
    pub fn last_return(&self) -> Option<f64> {
        Some(self.sigma.last()? * self.z.last()?)
    }

    pub fn summary(&self) -> GarchSummary {
        GarchSummary {
            omega: self.params.omega,
            alpha: self.params.alpha,
            beta: self.params.beta,
            loglik: self.loglik,
            converged: self.converged,
            n_obs: self.n_obs(),
        }
    }
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Unconstrained coordinates `(ln ω, u, v)`: persistence
/// `α + β = MAX_PERSISTENCE·logistic(u)` and α's share of it `logistic(v)`.
fn to_params(x: &[f64]) -> GarchParams {
    let persistence = MAX_PERSISTENCE * logistic(x[1]);
    let share = logistic(x[2]);
    GarchParams {
        omega: x[0].exp(),
        alpha: persistence * share,
        beta: persistence * (1.0 - share),
    }
}

fn from_params(p: &GarchParams) -> [f64; 3] {
    let persistence = p.persistence();
    [
        p.omega.ln(),
        logit(persistence / MAX_PERSISTENCE),
        logit(p.alpha / persistence),
    ]
}

/// Fits GARCH(1,1) by Nelder–Mead on the negative log-likelihood, starting
/// from α = 0.05, β = 0.90 and ω matching the sample variance.
///
/// A fit that does not converge is still returned, with `converged = false`.
pub fn fit(returns: &[f64], opts: &FitOptions) -> Result<GarchFit> {
    if returns.len() < MIN_FIT_OBS {
        return Err(RiskError::Data(format!(
            "GARCH fit needs at least {MIN_FIT_OBS} observations, got {}",
            returns.len()
        )));
    }
    if let Some(i) = returns.iter().position(|r| !r.is_finite()) {
        return Err(RiskError::Data(format!("non-finite return at index {i}")));
    }
    let var = sample_variance(returns);
    let m = mean(returns);
    // tolerance for rounding noise on a constant series
    if !(var > 0.0 && var > 1e-14 * m * m) {
        return Err(RiskError::Data("returns have zero variance".into()));
    }

    let start = GarchParams {
        omega: var * (1.0 - 0.95),
        alpha: 0.05,
        beta: 0.90,
    };
    let nm_opts = NelderMeadOptions {
        max_iter: opts.max_iter,
        tol: opts.tol,
        initial_step: 0.5,
    };
    let objective = |x: &[f64]| {
        let p = to_params(x);
        if !(p.omega > 0.0 && p.omega.is_finite()) {
            return f64::INFINITY;
        }
        -loglik_unchecked(returns, &p)
    };
    let min = nelder_mead(objective, &from_params(&start), &nm_opts);
    let params = to_params(&min.x);
    let (sigma, z) = filter(returns, &params)?;
    Ok(GarchFit {
        params,
        sigma,
        z,
        loglik: -min.value,
        converged: min.converged,
        iterations: min.iterations,
    })
}
