//! Discrepancies between summary vectors and the indicator kernel.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::SummaryVector;

/// Distance ρ on the summary space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DistanceMetric {
    Euclidean,
    /// sqrt(Σ w_i (a_i − b_i)²) with every w_i > 0.
    WeightedEuclidean {
        weights: Vec<f64>,
    },
}

impl DistanceMetric {
    pub fn weighted(weights: Vec<f64>) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "metric weights must be positive and finite, got {w}"
            )));
        }
        Ok(Self::WeightedEuclidean { weights })
    }

    /// Weights 1/MAD² per component, from a batch of simulated summaries
    /// (rows are simulations). Components with zero MAD fall back to the
    /// sample variance, then to weight 1.
    pub fn from_mad(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map(Vec::len).unwrap_or(0);
        if d == 0 || rows.len() < 2 {
            return Err(Error::InvalidArgument(
                "need at least two simulated summary vectors".into(),
            ));
        }
        let weights = (0..d)
            .map(|j| {
                let col: Vec<f64> = rows.iter().map(|r| r[j]).filter(|v| v.is_finite()).collect();
                let m = crate::stats::mad(&col);
                if m > 0.0 {
                    1.0 / (m * m)
                } else {
                    let v = crate::stats::variance(&col);
                    if v > 0.0 {
                        1.0 / v
                    } else {
                        1.0
                    }
                }
            })
            .collect();
        Self::weighted(weights)
    }

    /// The same metric restricted to a subset of components.
    pub fn restrict(&self, indices: &[usize]) -> DistanceMetric {
        match self {
            Self::Euclidean => Self::Euclidean,
            Self::WeightedEuclidean { weights } => Self::WeightedEuclidean {
                weights: indices.iter().map(|&i| weights[i]).collect(),
            },
        }
    }

    /// Constant C with C‖a−b‖ ≤ ρ(a, b).
    pub fn lower_bound_constant(&self) -> f64 {
        match self {
            Self::Euclidean => 1.0,
            Self::WeightedEuclidean { weights } => weights.iter().cloned().fold(f64::INFINITY, f64::min).sqrt(),
        }
    }

    pub fn dimension(&self) -> Option<usize> {
        match self {
            Self::Euclidean => None,
            Self::WeightedEuclidean { weights } => Some(weights.len()),
        }
    }

    /// Distance between raw value slices, optionally on a subset of
    /// component indices (weights indexed by the full vector).
    #[inline]
    pub fn eval(&self, a: &[f64], b: &[f64], subset: Option<&[usize]>) -> f64 {
        let mut acc = 0.0;
        let mut add = |i: usize| {
            let d = a[i] - b[i];
            let w = match self {
                Self::Euclidean => 1.0,
                Self::WeightedEuclidean { weights } => weights[i],
            };
            acc += w * d * d;
        };
        match subset {
            Some(idx) => idx.iter().for_each(|&i| add(i)),
            None => (0..a.len()).for_each(&mut add),
        }
        acc.sqrt()
    }
}

/// Checked distance between two labelled summary vectors.
pub fn distance(a: &SummaryVector, b: &SummaryVector, metric: &DistanceMetric) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.names != b.names && a.names.iter().ne(b.names.iter()) {
        return Err(Error::NameMismatch);
    }
    if let Some(d) = metric.dimension() {
        if d != a.len() {
            return Err(Error::DimensionMismatch {
                left: a.len(),
                right: d,
            });
        }
    }
    Ok(metric.eval(&a.values, &b.values, None))
}

/// 𝕀{ρ ≤ ε}, boundary inclusive.
pub fn indicator_kernel(rho: f64, eps: f64) -> Result<u8> {
    if !(rho >= 0.0) || !(eps >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "kernel arguments must be nonnegative, got rho={rho}, eps={eps}"
        )));
    }
    Ok(u8::from(rho <= eps))
}
