//! Exact marginal posteriors for the normal model with a N(μ₀, φ₀) prior on
//! the mean and an IG(α, β) prior on the variance.
//!
//! With SS = Σ(yᵢ − ȳ)²:
//! - π(μ | y) ∝ N(μ; μ₀, φ₀)·[β + SS/2 + n(μ − ȳ)²/2]^(−α−n/2)
//! - π(μ | ȳ) ∝ N(μ; μ₀, φ₀)·[β + n(μ − ȳ)²/2]^(−α−1/2)
//! - π(φ | s²) = IG(α + (n−1)/2, β + SS/2), since SS/φ ~ χ²(n−1)
//! - π(φ | y) ∝ π(φ | s²)·∫ N(μ; μ₀, φ₀) exp{−n(μ − ȳ)²/2φ} dμ, integrated
//!   numerically over μ.
//!
//! Since (ȳ, SS) is sufficient, π(μ | y) and π(φ | y) are also the
//! posteriors given (ȳ, s²).

use statrs::distribution::{ContinuousCDF, InverseGamma};

use super::laplace::laplace_fit;
use super::{linspace, trapezoid, DensityGrid};
use crate::error::{Error, Result};
use crate::models::NormalHyper;

pub const DEFAULT_GRID_POINTS: usize = 4096;
const MU_HALF_WIDTH_SDS: f64 = 8.0;
const PHI_TAIL: f64 = 1e-6;
const INNER_POINTS: usize = 801;

#[derive(Debug, Clone, PartialEq)]
pub struct NormalMarginals {
    /// π(μ | ȳ, s²), equal to π(μ | y).
    pub mu_given_ybar_s2: DensityGrid,
    pub mu_given_ybar: DensityGrid,
    pub phi_given_s2: DensityGrid,
    /// π(φ | s², ȳ), equal to π(φ | y).
    pub phi_given_s2_ybar: DensityGrid,
}

impl NormalMarginals {
    /// (name, grid) pairs in a fixed order.
    pub fn named(&self) -> [(&'static str, &DensityGrid); 4] {
        [
            ("mu_given_ybar_s2", &self.mu_given_ybar_s2),
            ("mu_given_ybar", &self.mu_given_ybar),
            ("phi_given_s2", &self.phi_given_s2),
            ("phi_given_s2_ybar", &self.phi_given_s2_ybar),
        ]
    }
}

/// (n, ȳ, SS) of a sample.
pub fn sufficient(y: &[f64]) -> (usize, f64, f64) {
    let n = y.len();
    let ybar = y.iter().sum::<f64>() / n as f64;
    let ss = y.iter().map(|v| (v - ybar) * (v - ybar)).sum();
    (n, ybar, ss)
}

pub fn normal_exact_marginals(y: &[f64], hyper: &NormalHyper) -> Result<NormalMarginals> {
    normal_exact_marginals_with(y, hyper, DEFAULT_GRID_POINTS)
}

fn ln_mu_given_y(mu: f64, n: f64, ybar: f64, ss: f64, h: &NormalHyper) -> f64 {
    let d = mu - ybar;
    h.ln_mu_prior(mu) - (h.alpha + 0.5 * n) * (h.beta + 0.5 * ss + 0.5 * n * d * d).ln()
}

fn ln_mu_given_ybar(mu: f64, n: f64, ybar: f64, h: &NormalHyper) -> f64 {
    let d = mu - ybar;
    h.ln_mu_prior(mu) - (h.alpha + 0.5) * (h.beta + 0.5 * n * d * d).ln()
}

/// ln ∫ N(μ; μ₀, φ₀) exp{−n(μ − ȳ)²/2φ} dμ by the trapezoid rule, on a grid
/// centred at the Gaussian product mean.
fn ln_mu_integral(phi: f64, n: f64, ybar: f64, h: &NormalHyper) -> f64 {
    let prec = 1.0 / h.phi0 + n / phi;
    let m = (h.mu0 / h.phi0 + n * ybar / phi) / prec;
    let half = 10.0 / prec.sqrt();
    let g = |mu: f64| h.ln_mu_prior(mu) - n * (mu - ybar) * (mu - ybar) / (2.0 * phi);
    let g0 = g(m);
    let xs = linspace(m - half, m + half, INNER_POINTS);
    let fs: Vec<f64> = xs.iter().map(|&x| (g(x) - g0).exp()).collect();
    g0 + trapezoid(&xs, &fs).ln()
}

/// As [`normal_exact_marginals`] with `points` grid points per density.
pub fn normal_exact_marginals_with(y: &[f64], hyper: &NormalHyper, points: usize) -> Result<NormalMarginals> {
    hyper.validate()?;
    if y.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need n >= 2 observations, got {}",
            y.len()
        )));
    }
    if points < 16 {
        return Err(Error::InvalidArgument("grid needs at least 16 points".into()));
    }
    let (n, ybar, ss) = sufficient(y);
    let nf = n as f64;
    let h = *hyper;

    // μ range: a wide first pass sized from the Laplace fit, then ȳ ± 8 SDs
    // of the wider of the two μ-posteriors (plus the offset of the mode)
    let lap = laplace_fit(n, ybar, ss, hyper)?;
    let offset = (ybar - lap.mu_mode).abs();
    let rough = lap.mu_var.sqrt().max((h.beta / (h.alpha * nf)).sqrt());
    let pass = |half: f64| -> Result<(DensityGrid, DensityGrid)> {
        let xs = linspace(ybar - half, ybar + half, points);
        let a: Vec<f64> = xs.iter().map(|&m| ln_mu_given_y(m, nf, ybar, ss, &h)).collect();
        let b: Vec<f64> = xs.iter().map(|&m| ln_mu_given_ybar(m, nf, ybar, &h)).collect();
        Ok((
            DensityGrid::from_log_density(xs.clone(), &a)?,
            DensityGrid::from_log_density(xs, &b)?,
        ))
    };
    let (a1, b1) = pass(offset + 60.0 * rough)?;
    let (mu_y, mu_ybar) = pass(offset + MU_HALF_WIDTH_SDS * a1.sd().max(b1.sd()))?;

    // φ range: between the posterior given s² alone and the posterior with μ
    // known at μ₀, which bracket π(φ | y)
    let shape = h.alpha + 0.5 * (nf - 1.0);
    let rate = h.beta + 0.5 * ss;
    let ig = InverseGamma::new(shape, rate).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let known = InverseGamma::new(h.alpha + 0.5 * nf, rate + 0.5 * nf * (ybar - h.mu0).powi(2))
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let lo = ig.inverse_cdf(PHI_TAIL).min(known.inverse_cdf(PHI_TAIL));
    let hi = ig.inverse_cdf(1.0 - PHI_TAIL).max(known.inverse_cdf(1.0 - PHI_TAIL));
    let phis = linspace(lo, hi, points);
    let ln_ig =
        |phi: f64| shape * rate.ln() - statrs::function::gamma::ln_gamma(shape) - (shape + 1.0) * phi.ln() - rate / phi;
    let phi_s2: Vec<f64> = phis.iter().map(|&p| ln_ig(p)).collect();
    let phi_y: Vec<f64> = phis
        .iter()
        .map(|&p| h.ln_phi_prior(p) - 0.5 * nf * p.ln() - ss / (2.0 * p) + ln_mu_integral(p, nf, ybar, &h))
        .collect();

    Ok(NormalMarginals {
        mu_given_ybar_s2: mu_y,
        mu_given_ybar: mu_ybar,
        phi_given_s2: DensityGrid::from_log_density(phis.clone(), &phi_s2)?,
        phi_given_s2_ybar: DensityGrid::from_log_density(phis, &phi_y)?,
    })
}
