//! Variance-decomposition connectedness.
//!
//! Fits a VAR(p) by per-equation least squares, builds its moving-average
//! coefficients, computes the generalized forecast-error variance
//! decomposition
//!
//! ```text
//! θ_jk = σ_kk⁻¹ Σ_{h<H} (e_j' Ψ_h Σ e_k)²  /  Σ_{h<H} e_j' Ψ_h Σ Ψ_h' e_j
//! ```
//!
//! normalizes it row-wise and reduces it to total, directional and net
//! spillover indices. `θ̃_jk` is the share of variable j's forecast-error
//! variance attributed to shocks in k, so column sums (off-diagonal) are
//! what j transmits "to" others and row sums what it receives "from" them.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::MultiSeries;
use crate::error::{Result, RiskError};

pub const DEFAULT_HORIZON: usize = 10;

/// Fitted VAR(p): `y_t = c + Σ_i Φ_i y_{t−i} + ε_t`, `Cov(ε) = Σ`.
#[derive(Debug, Clone, PartialEq)]
pub struct VarModel {
    pub coefficients: Vec<DMatrix<f64>>,
    pub sigma: DMatrix<f64>,
    pub intercept: DVector<f64>,
}

impl VarModel {
    pub fn new(coefficients: Vec<DMatrix<f64>>, sigma: DMatrix<f64>, intercept: DVector<f64>) -> Result<Self> {
        let n = sigma.nrows();
        if coefficients.is_empty() {
            return Err(RiskError::Parameter("VAR order must be at least 1".into()));
        }
        if !sigma.is_square() || intercept.len() != n || coefficients.iter().any(|c| c.shape() != (n, n)) {
            return Err(RiskError::Parameter("inconsistent VAR dimensions".into()));
        }
        for i in 0..n {
            if sigma[(i, i)] < 0.0 {
                return Err(RiskError::Parameter(format!("negative variance at {i}")));
            }
            for j in 0..i {
                if (sigma[(i, j)] - sigma[(j, i)]).abs() > 1e-12 {
                    return Err(RiskError::Parameter("residual covariance is not symmetric".into()));
                }
            }
        }
        Ok(Self {
            coefficients,
            sigma,
            intercept,
        })
    }

    pub fn order(&self) -> usize {
        self.coefficients.len()
    }

    pub fn n_vars(&self) -> usize {
        self.sigma.nrows()
    }
}

/// Least-squares VAR(p) with an intercept per equation; the residual
/// covariance uses divisor `T − p`.
pub fn fit_var(data: &MultiSeries, p: usize) -> Result<VarModel> {
    let n = data.n_series();
    let t = data.n_obs();
    if p == 0 {
        return Err(RiskError::Config("VAR order must be at least 1".into()));
    }
    if n == 0 || t <= p || t - p < 10 * n * p {
        return Err(RiskError::Data(format!(
            "{t} observations are too few for a {n}-variable VAR({p})"
        )));
    }
    let rows = t - p;
    let k = 1 + n * p;
    let cols = data.columns();

    let x = DMatrix::from_fn(rows, k, |r, c| {
        if c == 0 {
            1.0
        } else {
            let lag = (c - 1) / n + 1;
            let var = (c - 1) % n;
            cols[var][r + p - lag]
        }
    });
    let y = DMatrix::from_fn(rows, n, |r, c| cols[c][r + p]);

    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let tol = smax * 1e-10;
    if svd.rank(tol) < k {
        return Err(RiskError::Estimation(
            "regressor matrix is rank deficient (constant or collinear series)".into(),
        ));
    }
    let b = svd
        .solve(&y, tol)
        .map_err(|e| RiskError::Estimation(e.to_string()))?;

    let resid = &y - &x * &b;
    let cov = resid.transpose() * &resid / rows as f64;
    let sigma = (&cov + cov.transpose()) * 0.5;

    let intercept = b.row(0).transpose();
    let coefficients = (0..p)
        .map(|i| b.rows(1 + i * n, n).transpose())
        .collect();
    VarModel::new(coefficients, sigma, intercept)
}

/// Ψ_0 = I, Ψ_h = Σ_{i=1..min(h,p)} Φ_i Ψ_{h−i}, for h < H.
pub fn ma_coefficients(model: &VarModel, horizon: usize) -> Result<Vec<DMatrix<f64>>> {
    if horizon == 0 {
        return Err(RiskError::Config("horizon must be at least 1".into()));
    }
    let n = model.n_vars();
    let mut psi: Vec<DMatrix<f64>> = Vec::with_capacity(horizon);
    psi.push(DMatrix::identity(n, n));
    for h in 1..horizon {
        let mut acc = DMatrix::zeros(n, n);
        for (i, phi) in model.coefficients.iter().enumerate().take(h) {
            acc += phi * &psi[h - 1 - i];
        }
        psi.push(acc);
    }
    Ok(psi)
}

/// Generalized FEVD at horizon `H`.
pub fn gfevd(model: &VarModel, horizon: usize) -> Result<DMatrix<f64>> {
    let n = model.n_vars();
    let sigma = &model.sigma;
    if let Some(k) = (0..n).find(|&k| !(sigma[(k, k)] > 0.0)) {
        return Err(RiskError::Domain(format!("zero residual variance for variable {k}")));
    }
    let psi = ma_coefficients(model, horizon)?;

    let mut num = DMatrix::<f64>::zeros(n, n);
    let mut den = DVector::<f64>::zeros(n);
    for ph in &psi {
        let ps = ph * sigma;
        let psp = &ps * ph.transpose();
        for j in 0..n {
            for k in 0..n {
                num[(j, k)] += ps[(j, k)] * ps[(j, k)];
            }
            den[j] += psp[(j, j)];
        }
    }
    Ok(DMatrix::from_fn(n, n, |j, k| num[(j, k)] / sigma[(k, k)] / den[j]))
}

/// Divides each row by its sum.
pub fn normalize_rows(theta: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut out = theta.clone();
    for (j, mut row) in out.row_iter_mut().enumerate() {
        let s = row.sum();
        if !(s > 0.0) {
            return Err(RiskError::Domain(format!("row {j} has nonpositive sum")));
        }
        row /= s;
    }
    Ok(out)
}

/// Total, directional and net connectedness, all in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Indices {
    pub tci: f64,
    pub to_others: Vec<f64>,
    pub from_others: Vec<f64>,
    pub net: Vec<f64>,
}

pub fn indices(theta_tilde: &DMatrix<f64>) -> Result<Indices> {
    let n = theta_tilde.nrows();
    if !theta_tilde.is_square() || n == 0 {
        return Err(RiskError::Domain("connectedness table must be square".into()));
    }
    for (j, row) in theta_tilde.row_iter().enumerate() {
        if (row.sum() - 1.0).abs() > 1e-8 {
            return Err(RiskError::Domain(format!("row {j} does not sum to one")));
        }
    }
    let off = |j: usize, k: usize| if j == k { 0.0 } else { theta_tilde[(j, k)] };
    let from_others: Vec<f64> = (0..n)
        .map(|j| 100.0 * (0..n).map(|k| off(j, k)).sum::<f64>())
        .collect();
    let to_others: Vec<f64> = (0..n)
        .map(|j| 100.0 * (0..n).map(|k| off(k, j)).sum::<f64>())
        .collect();
    let net = to_others.iter().zip(&from_others).map(|(t, f)| t - f).collect();
    let tci = from_others.iter().sum::<f64>() / n as f64;
    Ok(Indices {
        tci,
        to_others,
        from_others,
        net,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConnectednessTable {
    pub names: Vec<String>,
    pub horizon: usize,
    pub theta_tilde: DMatrix<f64>,
    pub indices: Indices,
}

/// One directed spillover: share of `to`'s forecast-error variance due to
/// shocks in `from`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: String,
    pub to: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeList {
    pub horizon: usize,
    pub tci: f64,
    pub edges: Vec<Edge>,
}

impl ConnectednessTable {
    pub fn edges(&self) -> EdgeList {
        let n = self.names.len();
        let mut edges = Vec::with_capacity(n * n.saturating_sub(1));
        for j in 0..n {
            for k in 0..n {
                if j != k {
                    edges.push(Edge {
                        from: self.names[k].clone(),
                        to: self.names[j].clone(),
                        weight: self.theta_tilde[(j, k)],
                    });
                }
            }
        }
        EdgeList {
            horizon: self.horizon,
            tci: self.indices.tci,
            edges,
        }
    }

    /// Spillover table: θ̃ rows (fractions summing to one) with a `from`
    /// column, then a `to` row whose last cell is the TCI and a `net` row.
    /// Border values are percentages.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let n = self.names.len();
        let mut header = vec!["variable".to_string()];
        header.extend(self.names.iter().cloned());
        header.push("from".into());
        wtr.write_record(&header)?;
        for j in 0..n {
            let mut row = vec![self.names[j].clone()];
            row.extend((0..n).map(|k| self.theta_tilde[(j, k)].to_string()));
            row.push(self.indices.from_others[j].to_string());
            wtr.write_record(&row)?;
        }
        let mut to = vec!["to".to_string()];
        to.extend(self.indices.to_others.iter().map(f64::to_string));
        to.push(self.indices.tci.to_string());
        wtr.write_record(&to)?;
        let mut net = vec!["net".to_string()];
        net.extend(self.indices.net.iter().map(f64::to_string));
        net.push(String::new());
        wtr.write_record(&net)?;
        wtr.flush()?;
        Ok(())
    }
}

/// GFEVD → row normalization → indices for a fitted model.
pub fn connectedness(model: &VarModel, names: &[String], horizon: usize) -> Result<ConnectednessTable> {
    if names.len() != model.n_vars() {
        return Err(RiskError::Alignment("one name per variable required".into()));
    }
    if names.len() < 2 {
        return Err(RiskError::Data("connectedness needs at least two variables".into()));
    }
    let theta_tilde = normalize_rows(&gfevd(model, horizon)?)?;
    let indices = indices(&theta_tilde)?;
    Ok(ConnectednessTable {
        names: names.to_vec(),
        horizon,
        theta_tilde,
        indices,
    })
}
