//! MA(2) binding functions, the second parameter value sharing the first
//! two autocovariances, and a simulation check of the lag-2 statistic.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::ma2::simulate_ma2;
use crate::models::ma2_invertible;
use crate::rng::{tag, RandomStream};
use crate::summaries::autocov::autocovariance_values;
use crate::types::{names, ParamVector};

const SCAN_CELLS: usize = 20_000;
const BISECT_TOL: f64 = 1e-10;

/// Expected autocovariances (1 + θ₁² + θ₂², θ₁ + θ₁θ₂, θ₂).
pub fn ma2_binding(theta: &[f64]) -> [f64; 3] {
    let (t1, t2) = (theta[0], theta[1]);
    [1.0 + t1 * t1 + t2 * t2, t1 + t1 * t2, t2]
}

#[derive(Debug, Clone, PartialEq)]
pub enum AlternateRoot {
    Root(ParamVector),
    Unique,
}

/// (1 + θ₂)²(1 + θ₂² − b₁) + b₂², zero where θ₁ = b₂/(1 + θ₂) matches b₁.
fn quartic(t2: f64, b1: f64, b2: f64) -> f64 {
    let u = 1.0 + t2;
    u * u * (1.0 + t2 * t2 - b1) + b2 * b2
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mut flo = f(lo);
    while hi - lo > BISECT_TOL {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The other invertible θ with the same first two binding-function values.
pub fn ma2_alternate_root(theta: &[f64]) -> Result<AlternateRoot> {
    if theta.len() != 2 {
        return Err(Error::DimensionMismatch {
            left: theta.len(),
            right: 2,
        });
    }
    if !ma2_invertible(theta) {
        return Err(Error::InvalidArgument(format!("θ = {theta:?} is not invertible")));
    }
    let [b1, b2, _] = ma2_binding(theta);
    let f = |t2: f64| quartic(t2, b1, b2);
    let grid: Vec<f64> = (0..=SCAN_CELLS)
        .map(|i| -1.0 + 2.0 * i as f64 / SCAN_CELLS as f64)
        .collect();
    let mut best: Option<(f64, f64)> = None;
    for w in grid.windows(2) {
        let (fa, fb) = (f(w[0]), f(w[1]));
        if fa == 0.0 || (fa < 0.0) != (fb < 0.0) {
            let t2 = if fa == 0.0 { w[0] } else { bisect(w[0], w[1], f) };
            let t1 = b2 / (1.0 + t2);
            let cand = [t1, t2];
            let dist = ((t1 - theta[0]).powi(2) + (t2 - theta[1]).powi(2)).sqrt();
            if ma2_invertible(&cand) && dist > 1e-6 && best.is_none_or(|(_, d)| dist > d) {
                best = Some((t2, dist));
            }
        }
    }
    Ok(match best {
        Some((t2, _)) => AlternateRoot::Root(ParamVector::new(
            vec![b2 / (1.0 + t2), t2],
            names(&["theta1", "theta2"]),
        )?),
        None => AlternateRoot::Unique,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct S3Report {
    pub theta: [f64; 2],
    pub n: usize,
    pub replications: usize,
    pub mean: f64,
    pub variance: f64,
    pub mean_se: f64,
    /// Variance implied by the (θ₂/n)χ²(n) law, 2θ₂²/n.
    pub claimed_variance: f64,
    /// Bartlett's large-sample variance of the lag-2 autocovariance,
    /// (γ₀² + 2γ₁² + 3γ₂²)/n for unit innovations.
    pub bartlett_variance: f64,
    pub mean_ok: bool,
    pub variance_ok: bool,
    pub passed: bool,
}

/// Simulates the lag-2 autocovariance at θ and compares its mean with θ₂
/// (within 4 SEs) and its variance with 2θ₂²/n (within 20%).
pub fn s3_asymptotic_check(theta: &[f64], n: usize, replications: usize, stream: &RandomStream) -> Result<S3Report> {
    if theta.len() != 2 {
        return Err(Error::DimensionMismatch {
            left: theta.len(),
            right: 2,
        });
    }
    if theta[1] == 0.0 {
        return Err(Error::InvalidArgument("the check needs θ₂ ≠ 0".into()));
    }
    if replications < 2 || n < 3 {
        return Err(Error::InvalidArgument(
            "need at least 2 replications of length >= 3".into(),
        ));
    }
    let base = stream.derive(tag::REPLICATE);
    let s3: Vec<f64> = (0..replications as u64)
        .into_par_iter()
        .map(|r| {
            let y = simulate_ma2(theta, n, &mut base.derive(r).rng())?;
            Ok(autocovariance_values(&y, 2)?[2])
        })
        .collect::<Result<_>>()?;
    let mean = crate::stats::mean(&s3);
    let variance = crate::stats::variance(&s3);
    let mean_se = (variance / replications as f64).sqrt();
    let nf = n as f64;
    let claimed_variance = 2.0 * theta[1] * theta[1] / nf;
    let [g0, g1, g2] = ma2_binding(theta);
    let bartlett_variance = (g0 * g0 + 2.0 * g1 * g1 + 3.0 * g2 * g2) / nf;
    let mean_ok = (mean - theta[1]).abs() <= 4.0 * mean_se;
    let variance_ok = (variance - claimed_variance).abs() <= 0.2 * claimed_variance;
    Ok(S3Report {
        theta: [theta[0], theta[1]],
        n,
        replications,
        mean,
        variance,
        mean_se,
        claimed_variance,
        bartlett_variance,
        mean_ok,
        variance_ok,
        passed: mean_ok && variance_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn root(theta: &[f64]) -> [f64; 2] {
        match ma2_alternate_root(theta).unwrap() {
            AlternateRoot::Root(p) => [p.values[0], p.values[1]],
            AlternateRoot::Unique => panic!("expected a second root for {theta:?}"),
        }
    }

    #[test]
    fn binding_values() {
        assert_eq!(ma2_binding(&[0.0, 0.0]), [1.0, 0.0, 0.0]);
        let b = ma2_binding(&[0.9, -0.05]);
        assert!((b[0] - 1.8125).abs() < 1e-12);
        assert!((b[1] - 0.855).abs() < 1e-12);
        assert_eq!(b[2], -0.05);
    }

    #[test]
    fn second_root_of_reference_theta() {
        let r = root(&[0.9, -0.05]);
        assert!((r[0] - 0.4860).abs() < 1e-3, "{r:?}");
        assert!((r[1] - 0.7591).abs() < 1e-3, "{r:?}");
        assert!(ma2_invertible(&r));
        let (a, b) = (ma2_binding(&r), ma2_binding(&[0.9, -0.05]));
        assert!((a[0] - b[0]).abs() < 1e-6 && (a[1] - b[1]).abs() < 1e-6);
        let back = root(&r);
        assert!((back[0] - 0.9).abs() < 1e-3 && (back[1] + 0.05).abs() < 1e-3);
    }

    #[test]
    fn unique_and_invalid() {
        assert_eq!(ma2_alternate_root(&[0.0, 0.0]).unwrap(), AlternateRoot::Unique);
        assert!(ma2_alternate_root(&[3.0, 0.0]).is_err());
    }

    #[test]
    fn s3_check_rejects_zero_theta2() {
        assert!(s3_asymptotic_check(&[0.9, 0.0], 100, 10, &RandomStream::root(1)).is_err());
    }

    #[test]
    fn s3_mean_and_bartlett_variance() {
        let r = s3_asymptotic_check(&[0.9, -0.05], 2000, 400, &RandomStream::root(2)).unwrap();
        assert!(r.mean_ok, "{r:?}");
        // sampling variance of a variance estimate with 400 replicates ≈ 7%
        assert!((r.variance / r.bartlett_variance - 1.0).abs() < 0.25, "{r:?}");
    }

    #[test]
    fn s3_variance_scales_as_one_over_n() {
        let a = s3_asymptotic_check(&[0.9, -0.05], 1000, 400, &RandomStream::root(3)).unwrap();
        let b = s3_asymptotic_check(&[0.9, -0.05], 2000, 400, &RandomStream::root(3)).unwrap();
        let ratio = a.variance / b.variance;
        assert!((ratio - 2.0).abs() < 0.5, "{ratio}");
    }
}
