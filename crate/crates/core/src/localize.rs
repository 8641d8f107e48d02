//! Two-stage marginal estimation: a pilot SMC-ABC run on the full summaries
//! fixes a crude tolerance ε₀, then a continuation shrinks the tolerance on
//! one parameter's marginal summaries while every move keeps ρ ≤ ε₀.

use serde::{Deserialize, Serialize};

use crate::distance::{indicator_kernel, DistanceMetric};
use crate::error::{Error, Result};
use crate::models::Problem;
use crate::rng::{tag, RandomStream};
use crate::smc::{run_smc, smc_abc, Reduce, SmcConfig, SmcTrace, StoppingRule};
use crate::summaries::SummarySet;
use crate::types::{MarginalSubset, Population, SummaryVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizeConfig {
    /// Acceptance rate at which the pilot stops (p₀).
    pub pilot_acc_threshold: f64,
    /// Acceptance rate at which each continuation stops (p_j).
    pub final_acc_threshold: f64,
}

impl LocalizeConfig {
    pub fn new(pilot_acc_threshold: f64) -> Self {
        Self {
            pilot_acc_threshold,
            final_acc_threshold: 0.01,
        }
    }

    pub fn with_final(self, final_acc_threshold: f64) -> Self {
        Self {
            final_acc_threshold,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (p0, pj) = (self.pilot_acc_threshold, self.final_acc_threshold);
        if !(p0 > 0.0 && p0 <= 1.0 && pj > 0.0 && pj < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "acceptance thresholds must lie in (0,1), got p0 = {p0}, pj = {pj}"
            )));
        }
        if !(p0 > pj) {
            return Err(Error::InvalidArgument(format!(
                "pilot threshold {p0} must exceed final threshold {pj}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PilotResult {
    pub population: Population,
    /// Full-summary tolerance reached by the pilot; frozen afterwards.
    pub epsilon0: f64,
    pub trace: SmcTrace,
}

/// SMC-ABC on the full summaries, stopped once acceptance falls below `p0`.
pub fn pilot_run<P: Problem + ?Sized>(
    problem: &P,
    observed: &SummaryVector,
    metric: &DistanceMetric,
    config: &SmcConfig,
    p0: f64,
    stream: &RandomStream,
) -> Result<PilotResult> {
    let stop = StoppingRule::from_config(config).with_acc_rate(p0);
    let (population, trace) = smc_abc(problem, observed, metric, config, stop, &stream.derive(tag::PILOT))?;
    Ok(PilotResult {
        epsilon0: population.epsilon_full,
        population,
        trace,
    })
}

/// Adds ρ_j on `param`'s summary subset to every particle; returns the
/// population and the initial ε_j = max ρ_j.
pub fn attach_marginal_discrepancies(
    mut pop: Population,
    set: &SummarySet,
    param: &str,
    observed: &SummaryVector,
) -> Result<(Population, f64)> {
    let indices = set.indices(param)?;
    if observed.len() != set.full.len() {
        return Err(Error::DimensionMismatch {
            left: observed.len(),
            right: set.full.len(),
        });
    }
    let mut eps = 0.0f64;
    for p in &mut pop.particles {
        let r = pop.metric.eval(&p.summaries.values, &observed.values, Some(&indices));
        p.rho_marginal = Some(r);
        eps = eps.max(r);
    }
    pop.marginal = Some(MarginalSubset {
        param: param.to_string(),
        indices,
    });
    pop.epsilon_marginal = Some(eps);
    pop.validate()?;
    Ok((pop, eps))
}

/// Continuation reducing ε_j on `param`'s summaries with ε₀ frozen, stopped
/// once acceptance falls below `p_j`. `pop` must come from
/// [`attach_marginal_discrepancies`].
#[allow(clippy::too_many_arguments)]
pub fn marginal_continue<P: Problem + ?Sized>(
    pop: Population,
    epsilon0: f64,
    set: &SummarySet,
    param: &str,
    observed: &SummaryVector,
    problem: &P,
    config: &SmcConfig,
    p_j: f64,
    stream: &RandomStream,
) -> Result<(Population, SmcTrace)> {
    let subset = MarginalSubset {
        param: param.to_string(),
        indices: set.indices(param)?,
    };
    if pop.marginal.as_ref() != Some(&subset) {
        return Err(Error::InvalidArgument(format!(
            "population does not carry marginal discrepancies for `{param}`"
        )));
    }
    let stop = StoppingRule::from_config(config).with_acc_rate(p_j);
    let reduce = Reduce::Marginal {
        subset,
        frozen_full: Some(epsilon0),
    };
    let stream = stream.derive(tag::CONTINUE).derive_label(param);
    run_smc(pop, reduce, problem, observed, config, stop, &stream, 0)
}

/// Pilot plus continuation for one parameter.
#[allow(clippy::too_many_arguments)]
pub fn localize<P: Problem + ?Sized>(
    pilot: &PilotResult,
    set: &SummarySet,
    param: &str,
    observed: &SummaryVector,
    problem: &P,
    config: &SmcConfig,
    localize: &LocalizeConfig,
    stream: &RandomStream,
) -> Result<(Population, SmcTrace)> {
    localize.validate()?;
    let (pop, _) = attach_marginal_discrepancies(pilot.population.clone(), set, param, observed)?;
    marginal_continue(
        pop,
        pilot.epsilon0,
        set,
        param,
        observed,
        problem,
        config,
        localize.final_acc_threshold,
        stream,
    )
}

/// 𝕀{ρ ≤ ε₀}^α · 𝕀{ρ_j ≤ ε_j}^(1−α), which equals the product of the two
/// indicators for every interior α.
pub fn log_pool_indicator_check(rho_full: f64, eps0: f64, rho_j: f64, eps_j: f64, alpha: f64) -> Result<u8> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "pool weight must lie in (0,1), got {alpha}"
        )));
    }
    let a = f64::from(indicator_kernel(rho_full, eps0)?);
    let b = f64::from(indicator_kernel(rho_j, eps_j)?);
    Ok(u8::from(a.powf(alpha) * b.powf(1.0 - alpha) == 1.0))
}
