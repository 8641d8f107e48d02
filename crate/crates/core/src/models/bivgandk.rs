use rand::Rng;
use rand_distr::StandardNormal;

use super::gandk::{gandk_quantile, GANDK_C, GANDK_PRIOR};
use super::Model;
use crate::error::{Error, Result};
use crate::rng::StreamRng;
use crate::types::{names, Names};

/// Two-column sample from the bivariate g-and-k model.
#[derive(Debug, Clone, PartialEq)]
pub struct BivariateSample {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
}

/// Rows (z¹, z²) ~ N₂(0, [[1, r], [r, 1]]) via the Cholesky factor, then each
/// margin through its own g-and-k quantile function.
pub fn simulate_bivgandk(theta: &[f64], n: usize, rng: &mut StreamRng) -> Result<BivariateSample> {
    if theta.len() != 9 {
        return Err(Error::DimensionMismatch {
            left: theta.len(),
            right: 9,
        });
    }
    if n < 1 {
        return Err(Error::InvalidArgument("sample size must be >= 1".into()));
    }
    let r = theta[8];
    if !(r.abs() < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "correlation must lie in (-1, 1), got {r}"
        )));
    }
    let (a1, b1, g1, k1) = (theta[0], theta[1], theta[2], theta[3]);
    let (a2, b2, g2, k2) = (theta[4], theta[5], theta[6], theta[7]);
    let tail = (1.0 - r * r).sqrt();
    let mut x1 = Vec::with_capacity(n);
    let mut x2 = Vec::with_capacity(n);
    for _ in 0..n {
        let z1: f64 = rng.sample(StandardNormal);
        let w: f64 = rng.sample(StandardNormal);
        let z2 = r * z1 + tail * w;
        x1.push(gandk_quantile(z1, a1, b1, g1, k1, GANDK_C));
        x2.push(gandk_quantile(z2, a2, b2, g2, k2, GANDK_C));
    }
    Ok(BivariateSample { x1, x2 })
}

/// θ = (a¹, b¹, g¹, k¹, a², b², g², k², r); U(0,10) on each g-and-k
/// component and U(−1, 1) on r.
#[derive(Debug, Clone, PartialEq)]
pub struct BivGandKModel {
    pub n: usize,
}

impl BivGandKModel {
    pub fn new(n: usize) -> Result<Self> {
        if n < 8 {
            return Err(Error::InvalidArgument(format!(
                "bivariate g-and-k needs n >= 8, got {n}"
            )));
        }
        Ok(Self { n })
    }
}

impl Model for BivGandKModel {
    type Data = BivariateSample;

    fn param_names(&self) -> Names {
        names(&["a1", "b1", "g1", "k1", "a2", "b2", "g2", "k2", "r"])
    }

    fn prior_sample(&self, rng: &mut StreamRng) -> Vec<f64> {
        let mut t: Vec<f64> = (0..8).map(|_| rng.random_range(GANDK_PRIOR.0..GANDK_PRIOR.1)).collect();
        t.push(rng.random_range(-1.0..1.0));
        t
    }

    fn prior_density(&self, theta: &[f64]) -> f64 {
        let r = theta[8];
        if !(r > -1.0 && r < 1.0) {
            return 0.0;
        }
        super::uniform_box_density(&theta[..8], GANDK_PRIOR.0, GANDK_PRIOR.1) * 0.5
    }

    fn simulate(&self, theta: &[f64], rng: &mut StreamRng) -> Result<BivariateSample> {
        simulate_bivgandk(theta, self.n, rng)
    }
}
