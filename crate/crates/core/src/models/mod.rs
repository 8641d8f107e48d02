//! Priors and simulators for the example models.
//!
//! A [`Model`] owns a prior and a simulator producing raw data. The sampler
//! never sees raw data: it works with a [`Problem`], which couples a model
//! with a summary statistic. [`Composed`] is the generic coupling; models
//! with a cheaper way to reach the same summaries provide their own
//! `Problem` implementation (see [`gandk::GandKOctileProblem`]).

pub mod bivgandk;
pub mod gandk;
pub mod ma2;
pub mod normal;
pub mod regression;

use crate::error::Result;
use crate::rng::{RandomStream, StreamRng};
use crate::summaries::SummaryStatistic;
use crate::types::{Names, ParamVector};

pub use bivgandk::{BivGandKModel, BivariateSample};
pub use gandk::{gandk_quantile, GandKModel, GandKOctileProblem};
pub use ma2::{ma2_invertible, Ma2Model};
pub use normal::{NormalHyper, NormalModel};
pub use regression::{Design, NoiseKind, RegressionModel, RegressionPrior};

pub trait Model: Send + Sync {
    type Data;

    fn param_names(&self) -> Names;
    /// Draw θ from the prior.
    fn prior_sample(&self, rng: &mut StreamRng) -> Vec<f64>;
    /// Prior density at θ; zero outside the support.
    fn prior_density(&self, theta: &[f64]) -> f64;
    /// Simulate one dataset at θ.
    fn simulate(&self, theta: &[f64], rng: &mut StreamRng) -> Result<Self::Data>;
}

/// Everything the SMC sampler needs from a model and its summaries.
pub trait Problem: Send + Sync {
    fn param_names(&self) -> Names;
    fn summary_names(&self) -> Names;
    fn prior_sample(&self, rng: &mut StreamRng) -> Vec<f64>;
    fn prior_density(&self, theta: &[f64]) -> f64;
    /// S(x) for one fresh dataset x ~ p(·|θ).
    fn simulate_summaries(&self, theta: &[f64], rng: &mut StreamRng) -> Result<Vec<f64>>;
}

/// Model plus summary statistic, evaluated by simulate-then-summarise.
#[derive(Debug, Clone)]
pub struct Composed<M, S> {
    pub model: M,
    pub summary: S,
}

impl<M, S> Composed<M, S> {
    pub fn new(model: M, summary: S) -> Self {
        Self { model, summary }
    }
}

impl<M, S> Problem for Composed<M, S>
where
    M: Model,
    S: SummaryStatistic<M::Data>,
{
    fn param_names(&self) -> Names {
        self.model.param_names()
    }

    fn summary_names(&self) -> Names {
        self.summary.names()
    }

    fn prior_sample(&self, rng: &mut StreamRng) -> Vec<f64> {
        self.model.prior_sample(rng)
    }

    fn prior_density(&self, theta: &[f64]) -> f64 {
        self.model.prior_density(theta)
    }

    fn simulate_summaries(&self, theta: &[f64], rng: &mut StreamRng) -> Result<Vec<f64>> {
        let data = self.model.simulate(theta, rng)?;
        self.summary.compute(&data)
    }
}

impl<P: Problem + ?Sized> Problem for &P {
    fn param_names(&self) -> Names {
        (**self).param_names()
    }
    fn summary_names(&self) -> Names {
        (**self).summary_names()
    }
    fn prior_sample(&self, rng: &mut StreamRng) -> Vec<f64> {
        (**self).prior_sample(rng)
    }
    fn prior_density(&self, theta: &[f64]) -> f64 {
        (**self).prior_density(theta)
    }
    fn simulate_summaries(&self, theta: &[f64], rng: &mut StreamRng) -> Result<Vec<f64>> {
        (**self).simulate_summaries(theta, rng)
    }
}

/// θ ~ prior, drawn from the start of `stream`.
pub fn prior_sample<M: Model>(model: &M, stream: &RandomStream) -> ParamVector {
    let mut rng = stream.rng();
    ParamVector {
        values: model.prior_sample(&mut rng),
        names: model.param_names(),
    }
}

pub fn prior_density<M: Model>(model: &M, theta: &ParamVector) -> f64 {
    model.prior_density(&theta.values)
}

/// One dataset at θ, drawn from the start of `stream`.
pub fn simulate<M: Model>(model: &M, theta: &[f64], stream: &RandomStream) -> Result<M::Data> {
    model.simulate(theta, &mut stream.rng())
}

pub(crate) fn uniform_box_density(theta: &[f64], lo: f64, hi: f64) -> f64 {
    if theta.iter().all(|&t| t > lo && t < hi) {
        (hi - lo).powi(-(theta.len() as i32))
    } else {
        0.0
    }
}
