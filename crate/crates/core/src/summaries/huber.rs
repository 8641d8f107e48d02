//! Huber M-estimation of a linear regression by iteratively reweighted least
//! squares, with the residual scale re-estimated by the normalised MAD.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::SummaryStatistic;
use crate::error::{Error, Result};
use crate::models::Design;
use crate::stats;
use crate::types::{names, Names, SummaryVector};

/// Default tuning constant (95% Gaussian efficiency).
pub const HUBER_K: f64 = 1.345;
const MAD_SCALE: f64 = 1.4826;
const MAX_ITER: usize = 200;
const TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct HuberFit {
    pub beta: Vec<f64>,
    pub sigma: f64,
    pub iterations: usize,
}

fn weighted_ls(x: &DMatrix<f64>, y: &DVector<f64>, w: &[f64]) -> Result<DVector<f64>> {
    let q = x.ncols();
    let mut xtwx = DMatrix::zeros(q, q);
    let mut xtwy = DVector::zeros(q);
    for j in 0..q {
        let xj = x.column(j);
        for k in 0..=j {
            let xk = x.column(k);
            let v: f64 = w.iter().enumerate().map(|(i, wi)| wi * xj[i] * xk[i]).sum();
            xtwx[(j, k)] = v;
            xtwx[(k, j)] = v;
        }
        xtwy[j] = w.iter().enumerate().map(|(i, wi)| wi * xj[i] * y[i]).sum();
    }
    xtwx.cholesky().map(|c| c.solve(&xtwy)).ok_or(Error::RankDeficient)
}

fn residuals(x: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>, out: &mut [f64]) {
    out.iter_mut().zip(y.iter()).for_each(|(r, yi)| *r = *yi);
    for (j, b) in beta.iter().enumerate() {
        out.iter_mut()
            .zip(x.column(j).iter())
            .for_each(|(r, xij)| *r -= b * xij);
    }
}

/// Normalised MAD of the residuals, flushed to zero at rounding level
/// relative to the response.
fn robust_scale(resid: &[f64], y_scale: f64) -> f64 {
    let s = MAD_SCALE * stats::mad(resid);
    if s <= 1e-12 * y_scale {
        0.0
    } else {
        s
    }
}

/// Huber regression of `y` on `x` (no intercept) with tuning constant `k`.
pub fn huber_regression(x: &DMatrix<f64>, y: &[f64], k: f64) -> Result<HuberFit> {
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            left: x.nrows(),
            right: y.len(),
        });
    }
    if !(k > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "Huber constant must be positive, got {k}"
        )));
    }
    if x.nrows() <= x.ncols() {
        return Err(Error::RankDeficient);
    }
    let yv = DVector::from_column_slice(y);
    let y_scale = yv.amax().max(f64::MIN_POSITIVE);
    let mut beta = weighted_ls(x, &yv, &vec![1.0; y.len()])?;
    let mut resid = vec![0.0; y.len()];
    residuals(x, &yv, &beta, &mut resid);
    let mut sigma = robust_scale(&resid, y_scale);
    let mut last_change = f64::INFINITY;
    let mut w = vec![1.0; y.len()];
    for it in 1..=MAX_ITER {
        if sigma == 0.0 {
            // more than half the residuals vanish: exact fit
            return Ok(HuberFit {
                beta: beta.iter().copied().collect(),
                sigma: 0.0,
                iterations: it - 1,
            });
        }
        for (wi, r) in w.iter_mut().zip(&resid) {
            *wi = if r.abs() <= k * sigma { 1.0 } else { k * sigma / r.abs() };
        }
        let next = weighted_ls(x, &yv, &w)?;
        residuals(x, &yv, &next, &mut resid);
        let next_sigma = robust_scale(&resid, y_scale);
        last_change = (&next - &beta).amax().max((next_sigma - sigma).abs());
        beta = next;
        sigma = next_sigma;
        if last_change < TOL {
            return Ok(HuberFit {
                beta: beta.iter().copied().collect(),
                sigma,
                iterations: it,
            });
        }
    }
    Err(Error::NotConverged {
        iterations: MAX_ITER,
        last_change,
        beta: beta.iter().copied().collect(),
        sigma,
    })
}

/// (β̂₁, …, β̂_q, ln σ̂) from the Huber fit.
pub fn regression_summaries(x: &DMatrix<f64>, y: &[f64], k: f64) -> Result<SummaryVector> {
    let values = regression_summary_values(x, y, k)?;
    SummaryVector::new(values, summary_names(x.ncols()))
}

fn regression_summary_values(x: &DMatrix<f64>, y: &[f64], k: f64) -> Result<Vec<f64>> {
    let fit = huber_regression(x, y, k)?;
    if fit.sigma <= 0.0 {
        return Err(Error::DegenerateSample("robust residual scale is zero".into()));
    }
    let mut out = fit.beta;
    out.push(fit.sigma.ln());
    Ok(out)
}

fn summary_names(q: usize) -> Names {
    names(&(1..=q + 1).map(|j| format!("S{j}")).collect::<Vec<_>>())
}

/// Huber regression summaries against a fixed design.
#[derive(Debug, Clone)]
pub struct RegressionSummaries {
    pub design: Arc<Design>,
    pub k: f64,
}

impl RegressionSummaries {
    pub fn new(design: Arc<Design>) -> Self {
        Self { design, k: HUBER_K }
    }
}

impl SummaryStatistic<Vec<f64>> for RegressionSummaries {
    fn names(&self) -> Names {
        summary_names(self.design.ncols())
    }

    fn compute(&self, y: &Vec<f64>) -> Result<Vec<f64>> {
        regression_summary_values(&self.design.x, y, self.k)
    }
}
