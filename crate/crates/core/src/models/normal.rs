//! Normal sample with unknown mean μ and variance φ.
//!
//! Priors: μ ~ N(μ₀, φ₀), φ ~ IG(α, β), independent.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use super::Model;
use crate::error::{Error, Result};
use crate::rng::StreamRng;
use crate::types::{names, Names};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalHyper {
    pub mu0: f64,
    pub phi0: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for NormalHyper {
    fn default() -> Self {
        Self {
            mu0: 0.0,
            phi0: 1.0,
            alpha: 1.0,
            beta: 1.0,
        }
    }
}

impl NormalHyper {
    pub fn validate(&self) -> Result<()> {
        if !(self.phi0 > 0.0 && self.alpha > 0.0 && self.beta > 0.0) || !self.mu0.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "normal hyperparameters need phi0, alpha, beta > 0: {self:?}"
            )));
        }
        Ok(())
    }

    /// log IG(φ; α, β) = α ln β − ln Γ(α) − (α+1) ln φ − β/φ.
    pub fn ln_phi_prior(&self, phi: f64) -> f64 {
        if phi <= 0.0 {
            return f64::NEG_INFINITY;
        }
        self.alpha * self.beta.ln()
            - statrs::function::gamma::ln_gamma(self.alpha)
            - (self.alpha + 1.0) * phi.ln()
            - self.beta / phi
    }

    pub fn ln_mu_prior(&self, mu: f64) -> f64 {
        let d = mu - self.mu0;
        -0.5 * (2.0 * std::f64::consts::PI * self.phi0).ln() - d * d / (2.0 * self.phi0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalModel {
    pub n: usize,
    pub hyper: NormalHyper,
}

impl NormalModel {
    pub fn new(n: usize, hyper: NormalHyper) -> Result<Self> {
        hyper.validate()?;
        if n < 2 {
            return Err(Error::InvalidArgument(format!("normal model needs n >= 2, got {n}")));
        }
        Ok(Self { n, hyper })
    }
}

impl Model for NormalModel {
    type Data = Vec<f64>;

    fn param_names(&self) -> Names {
        names(&["mu", "phi"])
    }

    fn prior_sample(&self, rng: &mut StreamRng) -> Vec<f64> {
        let z: f64 = rng.sample(StandardNormal);
        let mu = self.hyper.mu0 + self.hyper.phi0.sqrt() * z;
        // 1/φ ~ Gamma(shape α, rate β)
        let precision = Gamma::new(self.hyper.alpha, 1.0 / self.hyper.beta)
            .expect("validated hyperparameters")
            .sample(rng);
        vec![mu, 1.0 / precision]
    }

    fn prior_density(&self, theta: &[f64]) -> f64 {
        (self.hyper.ln_mu_prior(theta[0]) + self.hyper.ln_phi_prior(theta[1])).exp()
    }

    fn simulate(&self, theta: &[f64], rng: &mut StreamRng) -> Result<Vec<f64>> {
        let (mu, phi) = (theta[0], theta[1]);
        if !(phi > 0.0) {
            return Err(Error::InvalidArgument(format!("variance must be positive, got {phi}")));
        }
        let sd = phi.sqrt();
        Ok((0..self.n)
            .map(|_| mu + sd * rng.sample::<f64, _>(StandardNormal))
            .collect())
    }
}
