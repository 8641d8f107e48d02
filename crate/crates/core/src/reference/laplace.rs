//! Laplace approximation to the normal-model posterior, parameterised by
//! (μ, η = ln φ), used as a cheap proxy for the posterior mean and variance
//! of each parameter.

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::models::NormalHyper;
use crate::summaries::SummaryStatistic;
use crate::types::{names, Names, SummaryVector};

const MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceFit {
    pub mu_mode: f64,
    pub phi_mode: f64,
    /// [H⁻¹]_μμ at the mode.
    pub mu_var: f64,
    /// φ̂²·[H⁻¹]_ηη, the delta-method variance of φ.
    pub phi_var: f64,
    /// Negative Hessian of the log posterior in (μ, η) at the mode.
    pub precision: Matrix2<f64>,
    pub iterations: usize,
}

/// Log posterior density of (μ, η), Jacobian of φ = e^η included.
fn log_post(x: Vector2<f64>, n: f64, ybar: f64, ss: f64, h: &NormalHyper) -> f64 {
    let (mu, eta) = (x[0], x[1]);
    let q = ss + n * (mu - ybar) * (mu - ybar);
    -(mu - h.mu0).powi(2) / (2.0 * h.phi0) - (h.alpha + 0.5 * n) * eta - (h.beta + 0.5 * q) * (-eta).exp()
}

fn grad_hess(x: Vector2<f64>, n: f64, ybar: f64, ss: f64, h: &NormalHyper) -> (Vector2<f64>, Matrix2<f64>) {
    let (mu, eta) = (x[0], x[1]);
    let e = (-eta).exp();
    let d = mu - ybar;
    let b = h.beta + 0.5 * (ss + n * d * d);
    let g = Vector2::new(-(mu - h.mu0) / h.phi0 - n * d * e, -(h.alpha + 0.5 * n) + b * e);
    let hm = Matrix2::new(-1.0 / h.phi0 - n * e, n * d * e, n * d * e, -b * e);
    (g, hm)
}

/// Damped Newton ascent to the joint mode from sufficient statistics
/// (n, ȳ, SS).
pub fn laplace_fit(n: usize, ybar: f64, ss: f64, h: &NormalHyper) -> Result<LaplaceFit> {
    h.validate()?;
    if !(ss > 0.0) {
        return Err(Error::DegenerateSample("sample has zero spread".into()));
    }
    let nf = n as f64;
    let phi_init = (h.beta + 0.5 * ss) / (h.alpha + 0.5 * nf);
    let mu_init = (h.mu0 / h.phi0 + nf * ybar / phi_init) / (1.0 / h.phi0 + nf / phi_init);
    let mut x = Vector2::new(mu_init, phi_init.ln());
    let mut f = log_post(x, nf, ybar, ss, h);
    for it in 1..=MAX_ITER {
        let (g, hm) = grad_hess(x, nf, ybar, ss, h);
        let neg = -hm;
        let step = match neg.cholesky() {
            Some(c) => c.solve(&g),
            // away from the mode the surface may not be concave
            None => g * 1e-3,
        };
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand = x + step * t;
            let fc = log_post(cand, nf, ybar, ss, h);
            if fc >= f {
                accepted = Some((cand, fc));
                break;
            }
            t *= 0.5;
        }
        let Some((next, fnext)) = accepted else {
            return Err(Error::OptimizerFailed("line search made no progress".into()));
        };
        let change = (next - x).amax();
        x = next;
        f = fnext;
        if change < 1e-12 * (1.0 + x.amax()) {
            let (_, hm) = grad_hess(x, nf, ybar, ss, h);
            let prec = -hm;
            let cov = prec
                .cholesky()
                .map(|c| c.inverse())
                .ok_or_else(|| Error::OptimizerFailed("Hessian at the mode is not negative definite".into()))?;
            let phi = x[1].exp();
            return Ok(LaplaceFit {
                mu_mode: x[0],
                phi_mode: phi,
                mu_var: cov[(0, 0)],
                phi_var: phi * phi * cov[(1, 1)],
                precision: prec,
                iterations: it,
            });
        }
    }
    Err(Error::OptimizerFailed(format!(
        "Newton iteration did not converge in {MAX_ITER} steps"
    )))
}

fn fit_values(y: &[f64], h: &NormalHyper) -> Result<Vec<f64>> {
    if y.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need n >= 2 observations, got {}",
            y.len()
        )));
    }
    let (n, ybar, ss) = super::normal::sufficient(y);
    let fit = laplace_fit(n, ybar, ss, h)?;
    Ok(vec![fit.mu_mode, fit.mu_var, fit.phi_mode, fit.phi_var])
}

/// (mu_mode, mu_var, phi_mode, phi_var) from the Laplace approximation.
pub fn laplace_idealized_summaries(y: &[f64], hyper: &NormalHyper) -> Result<SummaryVector> {
    SummaryVector::new(fit_values(y, hyper)?, LaplaceIdealized { hyper: *hyper }.names())
}

/// Laplace (mode, variance) pairs as a summary statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceIdealized {
    pub hyper: NormalHyper,
}

impl SummaryStatistic<Vec<f64>> for LaplaceIdealized {
    fn names(&self) -> Names {
        names(&["mu_mode", "mu_var", "phi_mode", "phi_var"])
    }

    fn compute(&self, y: &Vec<f64>) -> Result<Vec<f64>> {
        fit_values(y, &self.hyper)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference::normal_exact_marginals;
    use crate::rng::RandomStream;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn gradient_matches_finite_differences() {
        let h = NormalHyper::default();
        let x = Vector2::new(0.3, -0.2);
        let (g, hm) = grad_hess(x, 10.0, 0.5, 7.0, &h);
        let e = 1e-6;
        for i in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += e;
            xm[i] -= e;
            let fd = (log_post(xp, 10.0, 0.5, 7.0, &h) - log_post(xm, 10.0, 0.5, 7.0, &h)) / (2.0 * e);
            assert!((fd - g[i]).abs() < 1e-6);
            let (gp, _) = grad_hess(xp, 10.0, 0.5, 7.0, &h);
            let (gm, _) = grad_hess(xm, 10.0, 0.5, 7.0, &h);
            for j in 0..2 {
                assert!(((gp[j] - gm[j]) / (2.0 * e) - hm[(j, i)]).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn large_sample_mode_is_sample_mean() {
        let mut rng = RandomStream::new(21, 0).rng();
        let y: Vec<f64> = (0..100_000).map(|_| rng.sample(StandardNormal)).collect();
        let s = laplace_idealized_summaries(&y, &NormalHyper::default()).unwrap();
        let ybar = y.iter().sum::<f64>() / y.len() as f64;
        assert!((s.values[0] - ybar).abs() < 1e-6);
    }

    #[test]
    fn mode_has_positive_definite_precision() {
        let y = [0.53, -1.21, 0.31, 1.72, -0.44, 0.09, 0.87, -0.65, 1.12, 0.38];
        let (n, ybar, ss) = crate::reference::normal::sufficient(&y);
        let fit = laplace_fit(n, ybar, ss, &NormalHyper::default()).unwrap();
        assert!(fit.precision.cholesky().is_some());
        let (g, _) = grad_hess(
            Vector2::new(fit.mu_mode, fit.phi_mode.ln()),
            n as f64,
            ybar,
            ss,
            &NormalHyper::default(),
        );
        assert!(g.amax() < 1e-9);
    }

    #[test]
    fn close_to_exact_moments_at_small_n() {
        // proxies for posterior moments: the μ location agrees closely; the
        // variance proxies carry the O(1/n) bias of a Laplace approximation
        let y = [0.53, -1.21, 0.31, 1.72, -0.44, 0.09, 0.87, -0.65, 1.12, 0.38];
        let h = NormalHyper::default();
        let (n, ybar, ss) = crate::reference::normal::sufficient(&y);
        let fit = laplace_fit(n, ybar, ss, &h).unwrap();
        let exact = normal_exact_marginals(&y, &h).unwrap();
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
        assert!(rel(fit.mu_mode, exact.mu_given_ybar_s2.mean()) < 0.05);
        assert!(rel(fit.mu_var, exact.mu_given_ybar_s2.variance()) < 0.25);
        assert!(rel(fit.phi_mode, exact.phi_given_s2_ybar.mean()) < 0.25);
    }

    #[test]
    fn degenerate_sample() {
        assert!(matches!(
            laplace_idealized_summaries(&[1.0; 5], &NormalHyper::default()),
            Err(Error::DegenerateSample(_))
        ));
    }
}
