use super::SummaryStatistic;
use crate::error::{Error, Result};
use crate::types::{Names, SummaryVector};

/// Uncentred sample autocovariances η_j = (1/T) Σ_{t=j+1}^{T} y_t y_{t−j},
/// j = 0..=maxlag.
pub fn autocovariance_values(y: &[f64], maxlag: usize) -> Result<Vec<f64>> {
    let t = y.len();
    if t <= maxlag {
        return Err(Error::SeriesTooShort { needed: maxlag, got: t });
    }
    Ok((0..=maxlag)
        .map(|j| y[j..].iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / t as f64)
        .collect())
}

pub fn autocovariances(y: &[f64], maxlag: usize) -> Result<SummaryVector> {
    SummaryVector::new(autocovariance_values(y, maxlag)?, Autocovariances { maxlag }.names())
}

/// (η₀, …, η_maxlag) as a summary statistic.
#[derive(Debug, Clone, Copy)]
pub struct Autocovariances {
    pub maxlag: usize,
}

impl Default for Autocovariances {
    fn default() -> Self {
        Self { maxlag: 2 }
    }
}

impl SummaryStatistic<Vec<f64>> for Autocovariances {
    fn names(&self) -> Names {
        (0..=self.maxlag).map(|j| format!("eta{j}")).collect()
    }

    fn compute(&self, y: &Vec<f64>) -> Result<Vec<f64>> {
        autocovariance_values(y, self.maxlag)
    }
}
