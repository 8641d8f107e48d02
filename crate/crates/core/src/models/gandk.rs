//! Univariate g-and-k distribution, defined through its quantile function.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{uniform_box_density, Model, Problem};
use crate::error::{Error, Result};
use crate::rng::StreamRng;
use crate::stats;
use crate::summaries::octiles::{summaries_from_octiles, OctileSummaries, OCTILE_PROBS};
use crate::summaries::SummaryStatistic;
use crate::types::{names, Names};

/// Customary value of the g-and-k constant c.
pub const GANDK_C: f64 = 0.8;

/// Q(z) = a + b(1 + c·tanh(gz/2))(1 + z²)^k z.
#[inline]
pub fn gandk_quantile(z: f64, a: f64, b: f64, g: f64, k: f64, c: f64) -> f64 {
    a + b * (1.0 + c * (0.5 * g * z).tanh()) * (1.0 + z * z).powf(k) * z
}

/// n i.i.d. draws: Q applied to standard normal z's.
pub fn simulate_gandk(theta: &[f64], n: usize, rng: &mut StreamRng) -> Result<Vec<f64>> {
    if n < 1 {
        return Err(Error::InvalidArgument("g-and-k sample size must be >= 1".into()));
    }
    let (a, b, g, k) = (theta[0], theta[1], theta[2], theta[3]);
    Ok((0..n)
        .map(|_| gandk_quantile(rng.sample(StandardNormal), a, b, g, k, GANDK_C))
        .collect())
}

/// g-and-k with independent U(0, 10) priors on (a, b, g, k).
#[derive(Debug, Clone, PartialEq)]
pub struct GandKModel {
    pub n: usize,
    pub c: f64,
}

impl GandKModel {
    pub fn new(n: usize) -> Result<Self> {
        if n < 8 {
            return Err(Error::InvalidArgument(format!("g-and-k model needs n >= 8, got {n}")));
        }
        Ok(Self { n, c: GANDK_C })
    }
}

pub(crate) const GANDK_PRIOR: (f64, f64) = (0.0, 10.0);

impl Model for GandKModel {
    type Data = Vec<f64>;

    fn param_names(&self) -> Names {
        names(&["a", "b", "g", "k"])
    }

    fn prior_sample(&self, rng: &mut StreamRng) -> Vec<f64> {
        (0..4).map(|_| rng.random_range(GANDK_PRIOR.0..GANDK_PRIOR.1)).collect()
    }

    fn prior_density(&self, theta: &[f64]) -> f64 {
        uniform_box_density(theta, GANDK_PRIOR.0, GANDK_PRIOR.1)
    }

    fn simulate(&self, theta: &[f64], rng: &mut StreamRng) -> Result<Vec<f64>> {
        let (a, b, g, k) = (theta[0], theta[1], theta[2], theta[3]);
        Ok((0..self.n)
            .map(|_| gandk_quantile(rng.sample(StandardNormal), a, b, g, k, self.c))
            .collect())
    }
}

/// g-and-k model with the octile summaries, computed without materialising
/// the sample.
///
/// Q is increasing in z, so each order statistic of the sample is Q applied
/// to the matching order statistic of the normal draws. Only the fourteen
/// order statistics the interpolated octiles need are selected from z and
/// mapped through Q; the result equals `OctileSummaries` on the full
/// simulated sample for the same random stream.
#[derive(Debug, Clone)]
pub struct GandKOctileProblem {
    pub model: GandKModel,
}

impl GandKOctileProblem {
    pub fn new(model: GandKModel) -> Self {
        Self { model }
    }
}

impl Problem for GandKOctileProblem {
    fn param_names(&self) -> Names {
        self.model.param_names()
    }

    fn summary_names(&self) -> Names {
        OctileSummaries.names()
    }

    fn prior_sample(&self, rng: &mut StreamRng) -> Vec<f64> {
        self.model.prior_sample(rng)
    }

    fn prior_density(&self, theta: &[f64]) -> f64 {
        self.model.prior_density(theta)
    }

    fn simulate_summaries(&self, theta: &[f64], rng: &mut StreamRng) -> Result<Vec<f64>> {
        let n = self.model.n;
        let (a, b, g, k) = (theta[0], theta[1], theta[2], theta[3]);
        let mut z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let positions: Vec<(usize, f64)> = OCTILE_PROBS.iter().map(|&p| stats::quantile_position(n, p)).collect();
        let mut ranks = Vec::with_capacity(14);
        for &(lo, _) in &positions {
            ranks.push(lo);
            ranks.push((lo + 1).min(n - 1));
        }
        let zs = stats::order_statistics(&mut z, &ranks);
        let q = |z: f64| gandk_quantile(z, a, b, g, k, self.model.c);
        let mut octiles = [0.0; 7];
        for (i, &(_, frac)) in positions.iter().enumerate() {
            octiles[i] = stats::interpolate(q(zs[2 * i]), q(zs[2 * i + 1]), frac);
        }
        Ok(summaries_from_octiles(&octiles)?.to_vec())
    }
}
