//! Summary statistic functions and the parameter → marginal-subset map.

pub mod autocov;
pub mod huber;
pub mod octiles;
pub mod rank;

use crate::error::{Error, Result};
use crate::models::BivariateSample;
use crate::types::{names, Names, SummaryVector};

pub use autocov::{autocovariances, Autocovariances};
pub use huber::{huber_regression, regression_summaries, HuberFit, RegressionSummaries, HUBER_K};
pub use octiles::{octile_summaries, OctileSummaries};
pub use rank::gaussian_rank_correlation;

/// A summary statistic function S applied to a model's data.
pub trait SummaryStatistic<D>: Send + Sync {
    fn names(&self) -> Names;
    fn compute(&self, data: &D) -> Result<Vec<f64>>;

    /// Labelled evaluation.
    fn summarize(&self, data: &D) -> Result<SummaryVector> {
        SummaryVector::new(self.compute(data)?, self.names())
    }
}

/// Full summary names plus the subset designated for each parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct SummarySet {
    pub full: Names,
    pub marginal_map: Vec<(String, Vec<String>)>,
}

impl SummarySet {
    pub fn new(full: Names, marginal_map: Vec<(String, Vec<String>)>) -> Result<Self> {
        for (param, subset) in &marginal_map {
            if subset.is_empty() {
                return Err(Error::InvalidArgument(format!("empty summary subset for `{param}`")));
            }
            if let Some(s) = subset.iter().find(|s| !full.contains(s)) {
                return Err(Error::InvalidArgument(format!(
                    "summary `{s}` mapped to `{param}` is not in the full set"
                )));
            }
        }
        Ok(Self { full, marginal_map })
    }

    /// Every parameter in `params` must have a subset.
    pub fn check_covers(&self, params: &[String]) -> Result<()> {
        match params.iter().find(|p| !self.marginal_map.iter().any(|(q, _)| q == *p)) {
            Some(p) => Err(Error::UnknownParameter(p.clone())),
            None => Ok(()),
        }
    }

    pub fn subset_names(&self, param: &str) -> Result<&[String]> {
        self.marginal_map
            .iter()
            .find(|(p, _)| p == param)
            .map(|(_, s)| s.as_slice())
            .ok_or_else(|| Error::UnknownParameter(param.to_string()))
    }

    /// Positions of the parameter's subset within the full vector.
    pub fn indices(&self, param: &str) -> Result<Vec<usize>> {
        Ok(self
            .subset_names(param)?
            .iter()
            .map(|s| self.full.iter().position(|f| f == s).expect("validated subset"))
            .collect())
    }

    pub fn params(&self) -> impl Iterator<Item = &str> {
        self.marginal_map.iter().map(|(p, _)| p.as_str())
    }

    fn from_lists(full: &[&str], map: &[(&str, &[&str])]) -> Self {
        Self::new(
            names(full),
            map.iter()
                .map(|(p, s)| (p.to_string(), s.iter().map(|x| x.to_string()).collect()))
                .collect(),
        )
        .expect("static summary set is consistent")
    }

    pub fn normal() -> Self {
        Self::from_lists(&["ybar", "s"], &[("mu", &["ybar"]), ("phi", &["s"])])
    }

    pub fn ma2() -> Self {
        Self::from_lists(
            &["eta0", "eta1", "eta2"],
            &[("theta1", &["eta0", "eta1"]), ("theta2", &["eta2"])],
        )
    }

    pub fn gandk() -> Self {
        Self::from_lists(
            &["S1", "S2", "S3", "S4"],
            &[("a", &["S1"]), ("b", &["S2"]), ("g", &["S3"]), ("k", &["S4"])],
        )
    }

    pub fn bivgandk() -> Self {
        let full = BivariateSummaries.names();
        let full: Vec<&str> = full.iter().map(String::as_str).collect();
        Self::from_lists(
            &full,
            &[
                ("a1", &["x1_S1"]),
                ("b1", &["x1_S2"]),
                ("g1", &["x1_S3"]),
                ("k1", &["x1_S4"]),
                ("a2", &["x2_S1"]),
                ("b2", &["x2_S2"]),
                ("g2", &["x2_S3"]),
                ("k2", &["x2_S4"]),
                ("r", &["Sr"]),
            ],
        )
    }

    pub fn regression() -> Self {
        Self::from_lists(
            &["S1", "S2", "S3", "S4"],
            &[
                ("beta1", &["S1"]),
                ("beta2", &["S2"]),
                ("beta3", &["S3"]),
                ("sigma", &["S4"]),
            ],
        )
    }
}

/// The sub-vector of `s` designated for `param`, in declared order.
pub fn extract_marginal(s: &SummaryVector, set: &SummarySet, param: &str) -> Result<SummaryVector> {
    let wanted = set.subset_names(param)?;
    let idx: Vec<usize> = wanted
        .iter()
        .map(|w| {
            s.index_of(w)
                .ok_or_else(|| Error::InvalidArgument(format!("summary `{w}` missing")))
        })
        .collect::<Result<_>>()?;
    Ok(s.select(&idx))
}

/// (ȳ, s) with s² = (1/n)Σ(yᵢ − ȳ)².
#[derive(Debug, Clone, Copy, Default)]
pub struct NormalSufficient;

impl SummaryStatistic<Vec<f64>> for NormalSufficient {
    fn names(&self) -> Names {
        names(&["ybar", "s"])
    }

    fn compute(&self, y: &Vec<f64>) -> Result<Vec<f64>> {
        let n = y.len() as f64;
        let m = y.iter().sum::<f64>() / n;
        let ss = y.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
        Ok(vec![m, (ss / n).sqrt()])
    }
}

/// Octile summaries of each margin plus the Gaussian rank correlation.
#[derive(Debug, Clone, Copy, Default)]
pub struct BivariateSummaries;

impl SummaryStatistic<BivariateSample> for BivariateSummaries {
    fn names(&self) -> Names {
        names(&[
            "x1_S1", "x1_S2", "x1_S3", "x1_S4", "x2_S1", "x2_S2", "x2_S3", "x2_S4", "Sr",
        ])
    }

    fn compute(&self, data: &BivariateSample) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(9);
        out.extend(octiles::octile_values(&data.x1)?);
        out.extend(octiles::octile_values(&data.x2)?);
        out.push(gaussian_rank_correlation(&data.x1, &data.x2)?);
        Ok(out)
    }
}
