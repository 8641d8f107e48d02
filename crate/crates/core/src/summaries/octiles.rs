//! Robust location, scale, skewness and kurtosis from sample octiles.
//!
//! S₁ = L₂, S₂ = L₃ − L₁, S₃ = (L₃ + L₁ − 2L₂)/S₂, S₄ = (E₇ − E₅ + E₃ − E₁)/S₂,
//! with quartiles L and octiles E from the linear-interpolation rule in
//! [`crate::stats::quantile_position`].

use super::SummaryStatistic;
use crate::error::{Error, Result};
use crate::stats;
use crate::types::{names, Names, SummaryVector};

pub const OCTILE_PROBS: [f64; 7] = [0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875];

/// (S₁..S₄) from the seven octiles E₁..E₇ (E₂, E₄, E₆ are the quartiles).
pub fn summaries_from_octiles(e: &[f64; 7]) -> Result<[f64; 4]> {
    let (l1, l2, l3) = (e[1], e[3], e[5]);
    let s2 = l3 - l1;
    if !(s2 > 0.0) {
        return Err(Error::DegenerateSample(format!("interquartile range is {s2}")));
    }
    Ok([l2, s2, (l3 + l1 - 2.0 * l2) / s2, (e[6] - e[4] + e[2] - e[0]) / s2])
}

pub fn octile_values(y: &[f64]) -> Result<[f64; 4]> {
    if y.len() < 8 {
        return Err(Error::DegenerateSample(format!(
            "need at least 8 observations, got {}",
            y.len()
        )));
    }
    let mut buf = y.to_vec();
    let q = stats::quantiles(&mut buf, &OCTILE_PROBS);
    summaries_from_octiles(&[q[0], q[1], q[2], q[3], q[4], q[5], q[6]])
}

pub fn octile_summaries(y: &[f64]) -> Result<SummaryVector> {
    SummaryVector::new(octile_values(y)?.to_vec(), OctileSummaries.names())
}

#[derive(Debug, Clone, Copy, Default)]
pub struct OctileSummaries;

impl SummaryStatistic<Vec<f64>> for OctileSummaries {
    fn names(&self) -> Names {
        names(&["S1", "S2", "S3", "S4"])
    }

    fn compute(&self, y: &Vec<f64>) -> Result<Vec<f64>> {
        Ok(octile_values(y)?.to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomStream;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn symmetric_sample() {
        let m = 2.5;
        let base = [0.3, 1.1, 2.0, 0.05, 3.7, 0.9, 1.6, 2.2];
        let y: Vec<f64> = base.iter().flat_map(|v| [m + v, m - v]).collect();
        let s = octile_values(&y).unwrap();
        assert!((s[0] - m).abs() < 1e-12);
        assert!(s[2].abs() < 1e-12);
    }

    #[test]
    fn standard_normal_population_values() {
        // Φ⁻¹(0.75) = 0.67449, Φ⁻¹(0.875) = 1.15035, Φ⁻¹(0.625) = 0.31864
        let mut rng = RandomStream::new(12, 0).rng();
        let y: Vec<f64> = (0..100_000).map(|_| rng.sample(StandardNormal)).collect();
        let s = octile_values(&y).unwrap();
        let expected = [0.0, 1.3490, 0.0, 1.2331];
        for (got, want) in s.iter().zip(expected) {
            assert!((got - want).abs() < 0.02, "{s:?}");
        }
    }

    #[test]
    fn affine_equivariance() {
        let mut rng = RandomStream::new(12, 1).rng();
        let y: Vec<f64> = (0..501).map(|_| rng.sample::<f64, _>(StandardNormal).exp()).collect();
        let (alpha, gamma) = (3.25, -7.5);
        let t: Vec<f64> = y.iter().map(|v| alpha * v + gamma).collect();
        let s = octile_values(&y).unwrap();
        let st = octile_values(&t).unwrap();
        assert!((st[0] - (alpha * s[0] + gamma)).abs() < 1e-10);
        assert!((st[1] - alpha * s[1]).abs() < 1e-10);
        assert!((st[2] - s[2]).abs() < 1e-10);
        assert!((st[3] - s[3]).abs() < 1e-10);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(octile_values(&[1.0; 20]), Err(Error::DegenerateSample(_))));
        assert!(octile_values(&[1.0, 2.0, 3.0]).is_err());
    }
}
