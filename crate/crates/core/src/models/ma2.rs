use rand::Rng;
use rand_distr::StandardNormal;

use super::Model;
use crate::error::{Error, Result};
use crate::rng::StreamRng;
use crate::types::{names, Names};

/// Invertibility region: −2 < θ₁ < 2, θ₁ + θ₂ > −1, θ₁ − θ₂ < 1.
pub fn ma2_invertible(theta: &[f64]) -> bool {
    let (t1, t2) = (theta[0], theta[1]);
    t1 > -2.0 && t1 < 2.0 && t1 + t2 > -1.0 && t1 - t2 < 1.0
}

/// y_t = e_t + θ₁e_{t−1} + θ₂e_{t−2}, e ~ N(0,1), with e₀ and e₋₁ drawn
/// from the innovation law so the series is stationary from t = 1.
pub fn simulate_ma2(theta: &[f64], n: usize, rng: &mut StreamRng) -> Result<Vec<f64>> {
    if n < 1 {
        return Err(Error::InvalidArgument("MA(2) series length must be >= 1".into()));
    }
    let (t1, t2) = (theta[0], theta[1]);
    let mut e2: f64 = rng.sample(StandardNormal);
    let mut e1: f64 = rng.sample(StandardNormal);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let e: f64 = rng.sample(StandardNormal);
        y.push(e + t1 * e1 + t2 * e2);
        e2 = e1;
        e1 = e;
    }
    Ok(y)
}

/// MA(2) with a uniform prior on the invertibility triangle (area 4).
#[derive(Debug, Clone, PartialEq)]
pub struct Ma2Model {
    pub n: usize,
}

impl Ma2Model {
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidArgument(format!("MA(2) model needs n >= 3, got {n}")));
        }
        Ok(Self { n })
    }
}

impl Model for Ma2Model {
    type Data = Vec<f64>;

    fn param_names(&self) -> Names {
        names(&["theta1", "theta2"])
    }

    fn prior_sample(&self, rng: &mut StreamRng) -> Vec<f64> {
        loop {
            let t = [rng.random_range(-2.0..2.0), rng.random_range(-1.0..1.0)];
            if ma2_invertible(&t) {
                return t.to_vec();
            }
        }
    }

    fn prior_density(&self, theta: &[f64]) -> f64 {
        if ma2_invertible(theta) {
            0.25
        } else {
            0.0
        }
    }

    fn simulate(&self, theta: &[f64], rng: &mut StreamRng) -> Result<Vec<f64>> {
        simulate_ma2(theta, self.n, rng)
    }
}
