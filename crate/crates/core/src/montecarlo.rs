//! Multi-day Monte Carlo VaR / ES under GARCH(1,1) dynamics.
//!
//! Each path starts from the one-step-ahead variance implied by the last
//! in-sample return and filtered variance, then for every step draws an
//! innovation (standard normal, or a bootstrap draw from the fitted
//! standardized residuals), scales it by the current σ, adds it to the
//! running cumulative log return and updates the variance.
//!
//! Path `i` draws from its own ChaCha8 stream (`seed`, stream `i`), so the
//! simulated matrix is bit-identical however the paths are split across
//! worker threads.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RiskError};
use crate::garch::{next_variance, step, GarchFit, GarchParams};
use crate::mathstat::{empirical_quantile, quantile_rank};

const MIN_PATHS: usize = 100;
const MAX_HORIZON: usize = 250;
const MIN_TAIL: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Innovation {
    #[serde(rename = "normal")]
    Normal,
    #[serde(rename = "fhs")]
    FhsBootstrap,
}

impl fmt::Display for Innovation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Innovation::Normal => "normal",
            Innovation::FhsBootstrap => "fhs",
        })
    }
}

impl FromStr for Innovation {
    type Err = RiskError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(Innovation::Normal),
            "fhs" => Ok(Innovation::FhsBootstrap),
            other => Err(RiskError::Config(format!("unknown innovation {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_paths: usize,
    pub horizon: usize,
    pub level: f64,
    pub seed: u64,
    pub innovation: Innovation,
}

impl McConfig {
    /// 1,000 paths, 5 days, 1% level.
    pub fn new(seed: u64, innovation: Innovation) -> Self {
        Self {
            n_paths: 1_000,
            horizon: 5,
            level: 0.01,
            seed,
            innovation,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths < MIN_PATHS {
            return Err(RiskError::Config(format!(
                "n_paths {} below minimum {MIN_PATHS}",
                self.n_paths
            )));
        }
        if !(1..=MAX_HORIZON).contains(&self.horizon) {
            return Err(RiskError::Config(format!(
                "horizon {} outside 1..={MAX_HORIZON}",
                self.horizon
            )));
        }
        if !(self.level > 0.0 && self.level < 0.5) {
            return Err(RiskError::Config(format!("level {} outside (0, 0.5)", self.level)));
        }
        Ok(())
    }
}

/// Row-major `n_paths × horizon` matrix; entry `(i, h−1)` is path i's
/// cumulative return through step h.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeReturns {
    n_paths: usize,
    horizon: usize,
    data: Vec<f64>,
}

impl CumulativeReturns {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let horizon = rows.first().map_or(0, Vec::len);
        if horizon == 0 || rows.iter().any(|r| r.len() != horizon) {
            return Err(RiskError::Alignment("ragged or empty path matrix".into()));
        }
        Ok(Self {
            n_paths: rows.len(),
            horizon,
            data: rows.concat(),
        })
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn get(&self, path: usize, step: usize) -> f64 {
        self.data[path * self.horizon + step]
    }

    pub fn row(&self, path: usize) -> &[f64] {
        &self.data[path * self.horizon..(path + 1) * self.horizon]
    }

    /// Cumulative returns through step `h` (1-based) across all paths.
    pub fn column(&self, h: usize) -> Vec<f64> {
        (0..self.n_paths).map(|i| self.get(i, h - 1)).collect()
    }
}

fn path_rng(seed: u64, path: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

/// Simulates cumulative-return paths on the current rayon pool.
pub fn simulate_cumulative(fit: &GarchFit, cfg: &McConfig) -> Result<CumulativeReturns> {
    cfg.validate()?;
    fit.params.validate()?;
    let (last_sigma, last_r) = match (fit.sigma.last(), fit.last_return()) {
        (Some(s), Some(r)) => (*s, r),
        _ => return Err(RiskError::Data("GARCH fit holds no observations".into())),
    };
    let pool: &[f64] = &fit.z;
    if cfg.innovation == Innovation::FhsBootstrap && pool.is_empty() {
        return Err(RiskError::Data("empty standardized-residual pool".into()));
    }
    let sigma2_start = next_variance(&fit.params, last_r, last_sigma * last_sigma)?;
    let params = fit.params;
    let horizon = cfg.horizon;

    let mut data = vec![0.0; cfg.n_paths * horizon];
    data.par_chunks_mut(horizon)
        .enumerate()
        .for_each(|(i, row)| {
            let mut rng = path_rng(cfg.seed, i);
            let mut sigma2 = sigma2_start;
            let mut cum = 0.0;
            for slot in row.iter_mut() {
                let z = match cfg.innovation {
                    Innovation::Normal => rng.sample::<f64, _>(StandardNormal),
                    Innovation::FhsBootstrap => pool[rng.random_range(0..pool.len())],
                };
                let r = sigma2.sqrt() * z;
                cum += r;
                *slot = cum;
                sigma2 = step(&params, r, sigma2);
            }
        });

    Ok(CumulativeReturns {
        n_paths: cfg.n_paths,
        horizon,
        data,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HorizonRisk {
    pub horizon: usize,
    /// Signed cumulative-return quantile.
    pub var: f64,
    /// Signed mean of the worst `ceil(p·n)` cumulative returns.
    pub es: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermStructure {
    pub level: f64,
    pub n_paths: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub innovation: Option<Innovation>,
    pub horizons: Vec<HorizonRisk>,
}

impl TermStructure {
    /// `horizon,var,es` rows; values are signed returns (losses negative).
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["horizon", "var", "es"])?;
        for h in &self.horizons {
            wtr.write_record([h.horizon.to_string(), h.var.to_string(), h.es.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Empirical VaR and ES per horizon with tail size `k = ceil(p·n_paths)`.
pub fn term_structure(cum: &CumulativeReturns, p: f64) -> Result<TermStructure> {
    if !(p > 0.0 && p < 1.0) {
        return Err(RiskError::Config(format!("level {p} outside (0, 1)")));
    }
    let n = cum.n_paths();
    if (n as f64) * p < MIN_TAIL - 1e-9 {
        return Err(RiskError::TailTooSmall(format!(
            "{n} paths at level {p} leave fewer than {MIN_TAIL} tail paths"
        )));
    }
    let k = quantile_rank(p, n);
    let horizons = (1..=cum.horizon())
        .map(|h| {
            let mut col = cum.column(h);
            let var = empirical_quantile(&col, p)?;
            col.select_nth_unstable_by(k - 1, f64::total_cmp);
            let tail = &col[..k];
            let es = tail.iter().sum::<f64>() / k as f64;
            // the mean of the k smallest cannot exceed the k-th smallest;
            // the clamp only removes summation rounding
            Ok(HorizonRisk {
                horizon: h,
                var,
                es: es.min(var),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TermStructure {
        level: p,
        n_paths: n,
        seed: None,
        innovation: None,
        horizons,
    })
}

/// Simulates and reduces to a term structure, recording the seed.
pub fn run_mc(fit: &GarchFit, cfg: &McConfig) -> Result<TermStructure> {
    cfg.validate()?;
    if (cfg.n_paths as f64) * cfg.level < MIN_TAIL - 1e-9 {
        return Err(RiskError::TailTooSmall(format!(
            "{} paths at level {} leave fewer than {MIN_TAIL} tail paths",
            cfg.n_paths, cfg.level
        )));
    }
    let cum = simulate_cumulative(fit, cfg)?;
    let mut ts = term_structure(&cum, cfg.level)?;
    ts.seed = Some(cfg.seed);
    ts.innovation = Some(cfg.innovation);
    Ok(ts)
}

/// Simulates `n` returns from a GARCH(1,1) process started at its
/// unconditional variance, with innovations from `draw`.
pub fn simulate_garch<R, F>(params: &GarchParams, n: usize, rng: &mut R, mut draw: F) -> Vec<f64>
where
    R: Rng,
    F: FnMut(&mut R) -> f64,
{
    let mut sigma2 = params.unconditional_variance();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let r = sigma2.sqrt() * draw(rng);
        out.push(r);
        sigma2 = step(params, r, sigma2);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mathstat::{norm_inv_cdf, normal_es, sample_variance};
    use proptest::prelude::*;
    use rand::Rng;

    fn iid_fit(omega: f64) -> GarchFit {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r: Vec<f64> = (0..300).map(|_| omega.sqrt() * rng.sample::<f64, _>(StandardNormal)).collect();
        GarchFit::from_params(&r, GarchParams::new(omega, 0.0, 0.0).unwrap()).unwrap()
    }

    fn cfg(n_paths: usize, horizon: usize, level: f64, seed: u64, innovation: Innovation) -> McConfig {
        McConfig {
            n_paths,
            horizon,
            level,
            seed,
            innovation,
        }
    }

    #[test]
    fn config_validation() {
        assert!(cfg(99, 5, 0.01, 0, Innovation::Normal).validate().is_err());
        assert!(cfg(100, 0, 0.01, 0, Innovation::Normal).validate().is_err());
        assert!(cfg(100, 251, 0.01, 0, Innovation::Normal).validate().is_err());
        assert!(cfg(100, 5, 0.5, 0, Innovation::Normal).validate().is_err());
        assert!(McConfig::new(42, Innovation::Normal).validate().is_ok());
    }

    #[test]
    fn iid_sum_variance() {
        let omega = 1e-4;
        let fit = iid_fit(omega);
        let cum = simulate_cumulative(&fit, &cfg(200_000, 5, 0.01, 9, Innovation::Normal)).unwrap();
        for h in 1..=5 {
            let v = sample_variance(&cum.column(h));
            let target = omega * h as f64;
            assert!(((v - target) / target).abs() < 0.05, "h={h}: {v} vs {target}");
        }
    }

    #[test]
    fn zero_pool_gives_zero_paths() {
        let params = GarchParams::new(1e-5, 0.1, 0.8).unwrap();
        let fit = GarchFit::from_params(&[0.0; 50], params).unwrap();
        let cum = simulate_cumulative(&fit, &cfg(500, 5, 0.05, 3, Innovation::FhsBootstrap)).unwrap();
        assert!(cum.data.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn empty_pool_is_data_error() {
        let fit = GarchFit {
            params: GarchParams::new(1e-5, 0.1, 0.8).unwrap(),
            sigma: vec![],
            z: vec![],
            loglik: 0.0,
            converged: true,
            iterations: 0,
        };
        let err = simulate_cumulative(&fit, &cfg(500, 5, 0.05, 3, Innovation::FhsBootstrap));
        assert!(matches!(err, Err(RiskError::Data(_))));
    }

    #[test]
    fn seeds_are_deterministic() {
        let fit = iid_fit(1e-4);
        for innovation in [Innovation::Normal, Innovation::FhsBootstrap] {
            let a = simulate_cumulative(&fit, &cfg(1_000, 5, 0.01, 42, innovation)).unwrap();
            let b = simulate_cumulative(&fit, &cfg(1_000, 5, 0.01, 42, innovation)).unwrap();
            let c = simulate_cumulative(&fit, &cfg(1_000, 5, 0.01, 43, innovation)).unwrap();
            assert_eq!(a, b);
            assert_ne!(a, c);
        }
    }

    #[test]
    fn partitioning_does_not_change_paths() {
        let params = GarchParams::new(2e-6, 0.1, 0.85).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let r = simulate_garch(&params, 500, &mut rng, |g| g.sample(StandardNormal));
        let fit = GarchFit::from_params(&r, params).unwrap();
        let c = cfg(5_000, 10, 0.01, 7, Innovation::FhsBootstrap);
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| simulate_cumulative(&fit, &c).unwrap())
        };
        let one = run(1);
        assert_eq!(one, run(3));
        assert_eq!(one, run(8));
    }

    #[test]
    fn paths_follow_the_recursion() {
        let params = GarchParams::new(2e-6, 0.1, 0.85).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r = simulate_garch(&params, 300, &mut rng, |g| g.sample(StandardNormal));
        let fit = GarchFit::from_params(&r, params).unwrap();
        let c = cfg(100, 4, 0.05, 77, Innovation::Normal);
        let cum = simulate_cumulative(&fit, &c).unwrap();

        let last = *fit.sigma.last().unwrap();
        let last_r = last * fit.z.last().unwrap();
        for i in [0, 13, 99] {
            let mut g = ChaCha8Rng::seed_from_u64(77);
            g.set_stream(i as u64);
            let mut s2 = params.omega + params.alpha * last_r * last_r + params.beta * last * last;
            let mut acc = 0.0;
            for h in 0..4 {
                let z: f64 = g.sample(StandardNormal);
                let x = s2.sqrt() * z;
                acc += x;
                assert_eq!(cum.get(i, h), acc);
                s2 = params.omega + params.alpha * x * x + params.beta * s2;
            }
        }
    }

    #[test]
    fn term_structure_conventions() {
        let rows: Vec<Vec<f64>> = (1..=100).rev().map(|i| vec![i as f64 * 0.01]).collect();
        let cum = CumulativeReturns::from_rows(&rows).unwrap();
        let ts = term_structure(&cum, 0.05).unwrap();
        assert_eq!(ts.horizons[0].var, 0.05);
        assert!((ts.horizons[0].es - 0.03).abs() < 1e-15);

        let flat = CumulativeReturns::from_rows(&vec![vec![-0.2, 0.4]; 200]).unwrap();
        let ts = term_structure(&flat, 0.05).unwrap();
        assert_eq!(ts.horizons[1].var, 0.4);
        assert!((ts.horizons[1].es - 0.4).abs() < 1e-15);
        assert!(ts.horizons[1].es <= ts.horizons[1].var);

        assert!(matches!(term_structure(&flat, 0.01), Err(RiskError::TailTooSmall(_))));
    }

    #[test]
    fn term_structure_on_normal_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let rows: Vec<Vec<f64>> = (0..200_000).map(|_| vec![rng.sample(StandardNormal)]).collect();
        let ts = term_structure(&CumulativeReturns::from_rows(&rows).unwrap(), 0.01).unwrap();
        let h = ts.horizons[0];
        assert!(((h.var - -2.3263) / 2.3263).abs() < 0.02, "{h:?}");
        let es = normal_es(0.01, 1.0).unwrap();
        assert!((es - -2.6652).abs() < 1e-4);
        assert!(((h.es - es) / es).abs() < 0.02, "{h:?}");
    }

    #[test]
    fn iid_term_structure_scales_with_sqrt_horizon() {
        let omega = 4e-5;
        let ts = run_mc(&iid_fit(omega), &cfg(200_000, 5, 0.01, 1234, Innovation::Normal)).unwrap();
        assert_eq!(ts.seed, Some(1234));
        let q = norm_inv_cdf(0.01).unwrap();
        for h in &ts.horizons {
            let target = (omega * h.horizon as f64).sqrt() * q;
            assert!(((h.var - target) / target).abs() < 0.03, "{h:?} vs {target}");
        }
    }

    #[test]
    fn normal_and_bootstrap_agree_at_scale() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let pool: Vec<f64> = (0..100_000).map(|_| rng.sample(StandardNormal)).collect();
        let params = GarchParams::new(1e-4, 0.0, 0.0).unwrap();
        let fit = GarchFit::from_params(&pool.iter().map(|z| 0.01 * z).collect::<Vec<_>>(), params).unwrap();
        let n = run_mc(&fit, &cfg(200_000, 1, 0.01, 8, Innovation::Normal)).unwrap();
        let f = run_mc(&fit, &cfg(200_000, 1, 0.01, 8, Innovation::FhsBootstrap)).unwrap();
        let (a, b) = (n.horizons[0].var, f.horizons[0].var);
        assert!(((a - b) / a).abs() < 0.05, "{a} vs {b}");
    }

    #[test]
    fn extreme_residual_is_selected() {
        let params = GarchParams::new(1e-4, 0.0, 0.0).unwrap();
        let fit = GarchFit {
            params,
            sigma: vec![0.01, 0.01],
            z: vec![-10.0, 1.0],
            loglik: f64::NAN,
            converged: true,
            iterations: 0,
        };
        let ts = run_mc(&fit, &cfg(1_000, 1, 0.01, 5, Innovation::FhsBootstrap)).unwrap();
        assert_eq!(ts.horizons[0].var, 0.01 * -10.0);
        assert_eq!(ts.horizons[0].es, 0.01 * -10.0);
    }

    #[test]
    fn omega_doubling_scales_by_sqrt2() {
        let a = run_mc(&iid_fit(1e-4), &cfg(2_000, 3, 0.01, 6, Innovation::Normal)).unwrap();
        let b = run_mc(&iid_fit(2e-4), &cfg(2_000, 3, 0.01, 6, Innovation::Normal)).unwrap();
        for (x, y) in a.horizons.iter().zip(&b.horizons) {
            assert!((y.var / x.var - 2f64.sqrt()).abs() < 1e-12);
            assert!((y.es / x.es - 2f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn seed_sensitivity() {
        let fit = iid_fit(1e-4);
        let vars: Vec<f64> = (0..30)
            .map(|s| run_mc(&fit, &cfg(1_000, 1, 0.01, s, Innovation::Normal)).unwrap().horizons[0].var)
            .collect();
        assert!(sample_variance(&vars).sqrt() > 0.0);
    }

    #[test]
    fn run_mc_rejects_small_tail() {
        let err = run_mc(&iid_fit(1e-4), &cfg(100, 5, 0.01, 1, Innovation::Normal));
        assert!(matches!(err, Err(RiskError::TailTooSmall(_))));
    }

    #[test]
    fn csv_and_json_layout() {
        let ts = run_mc(&iid_fit(1e-4), &cfg(1_000, 2, 0.01, 42, Innovation::Normal)).unwrap();
        let mut buf = Vec::new();
        ts.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("horizon,var,es\n1,"));
        let json: serde_json::Value = serde_json::from_str(&ts.to_json().unwrap()).unwrap();
        assert_eq!(json["seed"], 42);
        assert_eq!(json["innovation"], "normal");
        assert_eq!(json["n_paths"], 1000);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn es_never_above_var(seed in 0u64..10_000, alpha in 0.0f64..0.3, beta in 0.0f64..0.6, level in 0.005f64..0.2) {
            let params = GarchParams::new(1e-5, alpha, beta).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let r = simulate_garch(&params, 300, &mut rng, |g| g.sample(StandardNormal));
            let fit = GarchFit::from_params(&r, params).unwrap();
            let c = cfg(1_000, 5, level, seed, Innovation::FhsBootstrap);
            let ts = run_mc(&fit, &c).unwrap();
            for h in &ts.horizons {
                prop_assert!(h.es <= h.var);
            }
        }
    }
}
