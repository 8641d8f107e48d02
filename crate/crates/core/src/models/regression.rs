//! Linear regression y = Xβ + σε without intercept, on a fixed design.
//!
//! The shipped design (`data/regression_design.csv`) is synthetic: 117 rows
//! and three columns shaped like an agency-performance dataset. Column 1 is
//! the square root of a log-normal size variable; columns 2 and 3 are
//! standardised size and experience proxies. [`Design::synthetic`] with
//! [`DESIGN_SEED`] regenerates the file exactly.

use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::Model;
use crate::error::{Error, Result};
use crate::rng::{RandomStream, StreamRng};
use crate::types::{names, Names};

pub const DESIGN_SEED: u64 = 117;
pub const DESIGN_ROWS: usize = 117;
pub const DESIGN_HEADER: [&str; 3] = ["sqrt_size", "staff_std", "experience_std"];

/// The shipped design matrix as CSV text.
pub const DESIGN_CSV: &str = include_str!("../../data/regression_design.csv");

#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub x: DMatrix<f64>,
    pub columns: Vec<String>,
}

impl Design {
    /// Deterministic synthetic design, values rounded to 6 decimals so the
    /// CSV round-trips exactly.
    pub fn synthetic(seed: u64) -> Design {
        let mut rng = RandomStream::new(seed, 0).rng();
        let n = DESIGN_ROWS;
        let mut size = Vec::with_capacity(n);
        let mut staff = Vec::with_capacity(n);
        let mut experience = Vec::with_capacity(n);
        for _ in 0..n {
            let log_size = 6.0 + 0.7 * rng.sample::<f64, _>(StandardNormal);
            size.push((log_size.exp()).sqrt());
            staff.push(0.6 * log_size + 0.5 * rng.sample::<f64, _>(StandardNormal));
            experience.push(rng.sample::<f64, _>(StandardNormal));
        }
        let standardise = |v: &mut Vec<f64>| {
            let m = crate::stats::mean(v);
            let s = crate::stats::std_dev(v);
            v.iter_mut().for_each(|x| *x = (*x - m) / s);
        };
        standardise(&mut staff);
        standardise(&mut experience);
        let round = |x: f64| (x * 1e6).round() / 1e6;
        let x = DMatrix::from_fn(n, 3, |i, j| {
            round(match j {
                0 => size[i],
                1 => staff[i],
                _ => experience[i],
            })
        });
        Design {
            x,
            columns: DESIGN_HEADER.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for i in 0..self.x.nrows() {
            let row: Vec<String> = (0..self.x.ncols()).map(|j| format!("{:.6}", self.x[(i, j)])).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Design> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty design file".into()))?;
        let columns: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
        let mut values = Vec::new();
        let mut rows = 0;
        for (lineno, line) in lines.enumerate() {
            let row: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("design row {}: {e}", lineno + 1)))?;
            if row.len() != columns.len() {
                return Err(Error::Parse(format!(
                    "design row {} has {} fields, header has {}",
                    lineno + 1,
                    row.len(),
                    columns.len()
                )));
            }
            values.extend(row);
            rows += 1;
        }
        let x = DMatrix::from_row_slice(rows, columns.len(), &values);
        Ok(Design { x, columns })
    }

    pub fn load(path: &Path) -> Result<Design> {
        Design::from_csv(&std::fs::read_to_string(path)?)
    }

    /// The design shipped with the crate.
    pub fn bundled() -> Design {
        Design::from_csv(DESIGN_CSV).expect("bundled design parses")
    }

    pub fn nrows(&self) -> usize {
        self.x.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.x.ncols()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NoiseKind {
    Gaussian,
    /// A `fraction` of the errors (chosen at random) are scaled by `scale`.
    ContaminatedGaussian {
        fraction: f64,
        scale: f64,
    },
}

impl NoiseKind {
    pub fn contaminated_default() -> Self {
        Self::ContaminatedGaussian {
            fraction: 0.1,
            scale: 5.0,
        }
    }
}

/// β_j ~ U(−beta_bound, beta_bound), σ ~ U(0, sigma_max), independent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionPrior {
    pub beta_bound: f64,
    pub sigma_max: f64,
}

impl Default for RegressionPrior {
    fn default() -> Self {
        Self {
            beta_bound: 5.0,
            sigma_max: 10.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RegressionModel {
    pub design: Arc<Design>,
    pub noise: NoiseKind,
    pub prior: RegressionPrior,
}

impl RegressionModel {
    pub fn new(design: Arc<Design>, noise: NoiseKind, prior: RegressionPrior) -> Self {
        Self { design, noise, prior }
    }

    pub fn q(&self) -> usize {
        self.design.ncols()
    }
}

/// y = Xβ + σ·noise for θ = (β, σ).
pub fn simulate_regression(theta: &[f64], model: &RegressionModel, rng: &mut StreamRng) -> Result<Vec<f64>> {
    let q = model.q();
    if theta.len() != q + 1 {
        return Err(Error::DimensionMismatch {
            left: theta.len(),
            right: q + 1,
        });
    }
    let sigma = theta[q];
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
    }
    let x = &model.design.x;
    let n = x.nrows();
    let mean = x * DVector::from_column_slice(&theta[..q]);
    let mut noise: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    if let NoiseKind::ContaminatedGaussian { fraction, scale } = model.noise {
        let m = ((fraction * n as f64).round() as usize).min(n);
        // partial Fisher–Yates picks m distinct rows
        let mut idx: Vec<usize> = (0..n).collect();
        for i in 0..m {
            let j = rng.random_range(i..n);
            idx.swap(i, j);
            noise[idx[i]] *= scale;
        }
    }
    Ok(mean.iter().zip(&noise).map(|(mu, e)| mu + sigma * e).collect())
}

impl Model for RegressionModel {
    type Data = Vec<f64>;

    fn param_names(&self) -> Names {
        let mut n: Vec<String> = (1..=self.q()).map(|j| format!("beta{j}")).collect();
        n.push("sigma".into());
        names(&n)
    }

    fn prior_sample(&self, rng: &mut StreamRng) -> Vec<f64> {
        let b = self.prior.beta_bound;
        let mut t: Vec<f64> = (0..self.q()).map(|_| rng.random_range(-b..b)).collect();
        t.push(rng.random_range(0.0..self.prior.sigma_max));
        t
    }

    fn prior_density(&self, theta: &[f64]) -> f64 {
        let q = self.q();
        let b = self.prior.beta_bound;
        let sigma = theta[q];
        if theta[..q].iter().all(|t| t.abs() < b) && sigma > 0.0 && sigma < self.prior.sigma_max {
            (2.0 * b).powi(-(q as i32)) / self.prior.sigma_max
        } else {
            0.0
        }
    }

    fn simulate(&self, theta: &[f64], rng: &mut StreamRng) -> Result<Vec<f64>> {
        simulate_regression(theta, self, rng)
    }
}
