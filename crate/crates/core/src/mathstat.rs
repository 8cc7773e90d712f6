//! Statistical primitives: normal distribution functions, the lower
//! empirical quantile, chi-square tails for the likelihood-ratio tests,
//! QQ-plot coordinates and the closed-form normal Expected Shortfall.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Result, RiskError};

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal CDF, Φ(x) = ½·erfc(−x/√2).
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

// Acklam's rational approximation coefficients.
const A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_69e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const D: [f64; 4] = [
    7.784_695_709_041_462e-3,
    3.224_671_290_700_398e-1,
    2.445_134_137_142_996,
    3.754_408_661_907_416,
];

fn acklam(p: f64) -> f64 {
    const P_LOW: f64 = 0.02425;
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// Inverse standard normal CDF.
///
/// Acklam's rational approximation (relative error ~1e-9) followed by one
/// Halley refinement step against [`norm_cdf`].
pub fn norm_inv_cdf(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(RiskError::Domain(format!("probability {p} outside (0, 1)")));
    }
    let x = acklam(p);
    let e = norm_cdf(x) - p;
    let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    Ok(x - u / (1.0 + 0.5 * x * u))
}

fn check_probability(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(RiskError::Domain(format!("probability {p} outside (0, 1)")))
    }
}

/// Rank of the lower empirical quantile, `k = ceil(p·n)` clamped to `1..=n`.
///
/// A 1e-9 slack absorbs binary representation error so that e.g. p=0.05,
/// n=200 lands on k=10 rather than 11.
pub fn quantile_rank(p: f64, n: usize) -> usize {
    let k = (p * n as f64 - 1e-9).ceil();
    (k.max(1.0) as usize).min(n)
}

/// The k-th smallest element of `xs` with `k = ceil(p·n)`. No
/// interpolation: the result is always a member of `xs`.
pub fn empirical_quantile(xs: &[f64], p: f64) -> Result<f64> {
    if xs.is_empty() {
        return Err(RiskError::Domain("empirical quantile of empty sample".into()));
    }
    check_probability(p)?;
    let k = quantile_rank(p, xs.len());
    let mut buf = xs.to_vec();
    let (_, kth, _) = buf.select_nth_unstable_by(k - 1, f64::total_cmp);
    Ok(*kth)
}

/// Upper tail probability of a chi-square variable with 1 or 2 degrees of
/// freedom.
pub fn chi2_sf(x: f64, df: u32) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(RiskError::Domain(format!("chi-square argument {x} is negative")));
    }
    match df {
        // 2·(1 − Φ(√x)) = erfc(√(x/2))
        1 => Ok(libm::erfc((0.5 * x).sqrt())),
        2 => Ok((-0.5 * x).exp()),
        _ => Err(RiskError::Domain(format!("unsupported degrees of freedom {df}"))),
    }
}

/// Lower-tail conditional mean of N(0, σ²): `−σ·φ(Φ⁻¹(p))/p`.
pub fn normal_es(p: f64, sigma: f64) -> Result<f64> {
    check_probability(p)?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(RiskError::Domain(format!("sigma {sigma} must be positive")));
    }
    Ok(-sigma * norm_pdf(norm_inv_cdf(p)?) / p)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance with divisor `n − 1`.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub fn sample_sd(xs: &[f64]) -> f64 {
    sample_variance(xs).sqrt()
}

/// (theoretical, empirical) quantile pairs, ascending in both coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QQPoints {
    pub points: Vec<(f64, f64)>,
}

impl QQPoints {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["theoretical", "empirical"])?;
        for (t, e) in &self.points {
            wtr.write_record([t.to_string(), e.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// QQ coordinates of `sample` against N(mean, sd²) at Hazen plotting
/// positions `(i − 0.5)/n`.
pub fn qq_points(sample: &[f64], mean: f64, sd: f64) -> Result<QQPoints> {
    if sample.len() < 2 {
        return Err(RiskError::Domain("QQ plot needs at least two observations".into()));
    }
    if !(sd > 0.0 && sd.is_finite()) {
        return Err(RiskError::Domain(format!("standard deviation {sd} must be positive")));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let points = sorted
        .into_iter()
        .enumerate()
        .map(|(i, x)| {
            let pos = (i as f64 + 0.5) / n;
            Ok((mean + sd * norm_inv_cdf(pos)?, x))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(QQPoints { points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    /// Composite Simpson quadrature of the normal density from 0 to x.
    fn cdf_by_quadrature(x: f64) -> f64 {
        let n = 20_000;
        let h = x / n as f64;
        let mut acc = norm_pdf(0.0) + norm_pdf(x);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * norm_pdf(i as f64 * h);
        }
        0.5 + acc * h / 3.0
    }

    fn inv_by_bisection(p: f64) -> f64 {
        let (mut lo, mut hi) = (-40.0, 40.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if cdf_by_quadrature(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn cdf_values() {
        assert_eq!(norm_cdf(0.0), 0.5);
        for x in [0.1, 0.7, 1.3, 2.5, 4.0, 7.5] {
            assert!((norm_cdf(x) + norm_cdf(-x) - 1.0).abs() < 1e-14);
        }
        assert!((norm_cdf(1.959964) - 0.975).abs() < 1e-6);
        assert!((cdf_by_quadrature(1.959964) - 0.975).abs() < 1e-6);
        for x in [-5.0, -2.0, -0.3, 0.4, 1.5, 3.3] {
            assert!((norm_cdf(x) - cdf_by_quadrature(x)).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn inverse_cdf_values() {
        assert_eq!(norm_inv_cdf(0.5).unwrap(), 0.0);
        let q05 = norm_inv_cdf(0.05).unwrap();
        let q01 = norm_inv_cdf(0.01).unwrap();
        assert!((q05 - -1.644854).abs() < 1e-5);
        assert!((q01 - -2.326348).abs() < 1e-5);
        assert!((q05 - inv_by_bisection(0.05)).abs() < 1e-9);
        assert!((q01 - inv_by_bisection(0.01)).abs() < 1e-9);
        for p in [1e-10, 1e-4, 0.02, 0.3, 0.97, 1.0 - 1e-7] {
            let x = norm_inv_cdf(p).unwrap();
            assert!((norm_cdf(x) - p).abs() <= 1e-9, "p={p}");
        }
        assert!(norm_inv_cdf(0.0).is_err());
        assert!(norm_inv_cdf(1.0).is_err());
        assert!(norm_inv_cdf(f64::NAN).is_err());
    }

    #[test]
    fn quantile_convention() {
        let xs: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(empirical_quantile(&xs, 0.05).unwrap(), 5.0);
        assert_eq!(empirical_quantile(&[0.3; 17], 0.01).unwrap(), 0.3);
        assert_eq!(quantile_rank(0.05, 200), 10);
        assert_eq!(quantile_rank(0.01, 100), 1);
        assert_eq!(quantile_rank(0.001, 100), 1);
        assert!(empirical_quantile(&[], 0.05).is_err());
        assert!(empirical_quantile(&[1.0], 0.0).is_err());
    }

    #[test]
    fn quantile_matches_sorting_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let xs: Vec<f64> = (0..1000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mut sorted = xs.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // ceil(0.01 * 1000) = 10
        assert_eq!(empirical_quantile(&xs, 0.01).unwrap(), sorted[9]);
    }

    #[test]
    fn chi2_tails() {
        assert_eq!(chi2_sf(0.0, 1).unwrap(), 1.0);
        assert!((chi2_sf(3.841459, 1).unwrap() - 0.05).abs() < 1e-5);
        assert!((chi2_sf(5.991465, 2).unwrap() - 0.05).abs() < 1e-6);
        for x in [0.2f64, 1.0, 3.0, 7.7, 15.0] {
            let oracle = 2.0 * (1.0 - cdf_by_quadrature(x.sqrt()));
            assert!((chi2_sf(x, 1).unwrap() - oracle).abs() < 1e-10, "x={x}");
            assert_eq!(chi2_sf(x, 2).unwrap(), (-x / 2.0).exp());
        }
        assert!(chi2_sf(1.0, 3).is_err());
        assert!(chi2_sf(-1.0, 1).is_err());
    }

    #[test]
    fn normal_es_closed_form() {
        let es = normal_es(0.5, 1.0).unwrap();
        assert!((es - -0.797885).abs() < 1e-6);
        let es1 = normal_es(0.01, 1.0).unwrap();
        assert!((normal_es(0.01, 2.0).unwrap() - 2.0 * es1).abs() < 1e-15);
        assert!(normal_es(0.01, 0.0).is_err());
        assert!(normal_es(1.5, 1.0).is_err());
    }

    #[test]
    fn normal_es_matches_simulation() {
        let n = 10_000_000;
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut draws: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let k = n / 100;
        draws.select_nth_unstable_by(k - 1, f64::total_cmp);
        let tail_mean = draws[..k].iter().sum::<f64>() / k as f64;
        let es = normal_es(0.01, 1.0).unwrap();
        assert!(((tail_mean - es) / es).abs() < 0.005, "sim {tail_mean} vs {es}");
    }

    #[test]
    fn qq_two_point_sample() {
        let qq = qq_points(&[1.0, -1.0], 0.0, 1.0).unwrap();
        let z = norm_inv_cdf(0.75).unwrap();
        assert!((qq.points[0].0 + z).abs() < 1e-15);
        assert!((qq.points[1].0 - z).abs() < 1e-15);
        assert_eq!(qq.points[0].1, -1.0);
        assert_eq!(qq.points[1].1, 1.0);
        assert!(qq_points(&[1.0, 2.0], 0.0, 0.0).is_err());
        assert!(qq_points(&[1.0], 0.0, 1.0).is_err());
    }

    #[test]
    fn qq_affine_equivariance() {
        let sample = [0.3, -1.2, 0.8, 2.2, -0.4, 0.05];
        let (m, s) = (mean(&sample), sample_sd(&sample));
        let raw = qq_points(&sample, m, s).unwrap();
        let z: Vec<f64> = sample.iter().map(|x| (x - m) / s).collect();
        let std = qq_points(&z, 0.0, 1.0).unwrap();
        for ((tr, er), (tz, ez)) in raw.points.iter().zip(&std.points) {
            assert!(((tr - m) / s - tz).abs() < 1e-12);
            assert!(((er - m) / s - ez).abs() < 1e-12);
        }
    }

    #[test]
    fn qq_slope_on_normal_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let xs: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let qq = qq_points(&xs, 0.0, 1.0).unwrap();
        let tx: Vec<f64> = qq.points.iter().map(|p| p.0).collect();
        let ey: Vec<f64> = qq.points.iter().map(|p| p.1).collect();
        let (mx, my) = (mean(&tx), mean(&ey));
        let sxy: f64 = tx.iter().zip(&ey).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = tx.iter().map(|x| (x - mx) * (x - mx)).sum();
        let slope = sxy / sxx;
        assert!((0.95..=1.05).contains(&slope), "slope {slope}");
    }

    proptest! {
        #[test]
        fn quantile_is_member_and_affine(xs in prop::collection::vec(-1e3f64..1e3, 1..200), p in 0.001f64..0.999, a in 0.5f64..4.0, b in -10.0f64..10.0) {
            let q = empirical_quantile(&xs, p).unwrap();
            prop_assert!(xs.contains(&q));
            let ys: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
            let qy = empirical_quantile(&ys, p).unwrap();
            prop_assert_eq!(qy, a * q + b);
        }

        #[test]
        fn inverse_round_trip(x in -6.0f64..6.0) {
            let back = norm_inv_cdf(norm_cdf(x)).unwrap();
            prop_assert!((back - x).abs() < 1e-8);
        }

        #[test]
        fn qq_coordinates_nondecreasing(xs in prop::collection::vec(-5.0f64..5.0, 2..100)) {
            let qq = qq_points(&xs, 0.1, 2.0).unwrap();
            prop_assert_eq!(qq.len(), xs.len());
            for w in qq.points.windows(2) {
                prop_assert!(w[0].0 <= w[1].0 && w[0].1 <= w[1].1);
            }
        }
    }
}
