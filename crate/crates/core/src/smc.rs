//! SMC-ABC by replenishment: drop the worst particles, resample survivors
//! into the empty slots, and move the copies with an ABC Metropolis–Hastings
//! kernel repeated adaptively.
//!
//! A run reduces one discrepancy: the full-summary one, or the one on a
//! marginal subset. Marginal runs may also carry a frozen full-summary
//! tolerance that every accepted move must respect.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distance::DistanceMetric;
use crate::error::{Error, Result};
use crate::models::Problem;
use crate::rng::{tag, RandomStream, StreamRng};
use crate::stats::cmp_f64;
use crate::types::{MarginalSubset, Names, ParamVector, Particle, Population, SummaryVector};

/// Prior redraws allowed per particle when simulated summaries are invalid.
const MAX_INIT_REDRAWS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmcConfig {
    pub n_particles: usize,
    pub drop_fraction: f64,
    /// Probability that a resampled particle is never moved.
    pub mcmc_target_miss: f64,
    pub stop_acc_rate: f64,
    pub max_simulations: u64,
    pub max_repeats: usize,
}

impl Default for SmcConfig {
    fn default() -> Self {
        Self {
            n_particles: 1000,
            drop_fraction: 0.5,
            mcmc_target_miss: 0.01,
            stop_acc_rate: 0.01,
            max_simulations: 2_000_000,
            max_repeats: 100,
        }
    }
}

impl SmcConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.drop_fraction > 0.0 && self.drop_fraction < 1.0) {
            return bad(format!("drop_fraction must lie in (0,1), got {}", self.drop_fraction));
        }
        if self.n_dropped() < 1 {
            return bad(format!(
                "N·drop_fraction must be at least 1 (N = {}, drop_fraction = {})",
                self.n_particles, self.drop_fraction
            ));
        }
        if self.n_particles - self.n_dropped() < 2 {
            return bad("at least two particles must survive elimination".into());
        }
        if !(self.mcmc_target_miss > 0.0 && self.mcmc_target_miss < 1.0) {
            return bad(format!(
                "mcmc_target_miss must lie in (0,1), got {}",
                self.mcmc_target_miss
            ));
        }
        if !(self.stop_acc_rate > 0.0 && self.stop_acc_rate <= 1.0) {
            return bad(format!("stop_acc_rate must lie in (0,1], got {}", self.stop_acc_rate));
        }
        if self.max_repeats < 1 {
            return bad("max_repeats must be at least 1".into());
        }
        Ok(())
    }

    pub fn n_dropped(&self) -> usize {
        (self.n_particles as f64 * self.drop_fraction).floor() as usize
    }
}

/// When to stop reducing the tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingRule {
    /// Stop once the pooled MCMC acceptance rate of an iteration falls below this.
    pub min_acc_rate: f64,
    pub max_simulations: u64,
}

impl StoppingRule {
    pub fn from_config(config: &SmcConfig) -> Self {
        Self {
            min_acc_rate: config.stop_acc_rate,
            max_simulations: config.max_simulations,
        }
    }

    pub fn with_acc_rate(self, min_acc_rate: f64) -> Self {
        Self { min_acc_rate, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    AcceptanceRate,
    Budget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Tolerance being reduced.
    pub epsilon: f64,
    /// Full-summary tolerance in force (frozen during continuation).
    pub epsilon_full: f64,
    pub acc_rate: f64,
    pub repeats: usize,
    pub repeats_clamped: bool,
    /// Cumulative simulations, initialisation included.
    pub simulations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmcTrace {
    pub records: Vec<IterationRecord>,
    pub stop_reason: StopReason,
    pub simulations: u64,
}

impl SmcTrace {
    pub fn final_epsilon(&self) -> Option<f64> {
        self.records.last().map(|r| r.epsilon)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,epsilon,epsilon_full,acc_rate,repeats,repeats_clamped,simulations\n");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{:e},{:e},{:e},{},{},{}",
                r.iteration, r.epsilon, r.epsilon_full, r.acc_rate, r.repeats, r.repeats_clamped, r.simulations
            );
        }
        out
    }
}

/// MCMC repeats so that a particle stays unmoved with probability about
/// `target_miss`: ceil(ln target_miss / ln(1 − acc)), clamped to [1, r_max].
/// Returns the count and whether the clamp at `r_max` was hit.
pub fn adaptive_repeats(acc_rate: f64, target_miss: f64, r_max: usize) -> (usize, bool) {
    if acc_rate >= 1.0 {
        return (1, false);
    }
    if !(acc_rate > 0.0) {
        return (r_max, true);
    }
    let r = (target_miss.ln() / (1.0 - acc_rate).ln()).ceil();
    if r > r_max as f64 {
        (r_max, true)
    } else {
        ((r as usize).max(1), false)
    }
}

/// Tolerances a proposal must satisfy.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraints {
    pub epsilon_full: Option<f64>,
    pub marginal: Option<(Vec<usize>, f64)>,
}

impl Constraints {
    pub fn admits(&self, rho_full: f64, rho_marginal: Option<f64>) -> bool {
        let full_ok = self.epsilon_full.is_none_or(|e| rho_full <= e);
        let marg_ok = match (&self.marginal, rho_marginal) {
            (None, _) => true,
            (Some((_, e)), Some(r)) => r <= *e,
            (Some(_), None) => false,
        };
        full_ok && marg_ok
    }
}

/// Shared, read-only inputs to particle evaluation.
struct Ctx<'a, P: Problem + ?Sized> {
    problem: &'a P,
    observed: &'a [f64],
    metric: &'a DistanceMetric,
    param_names: Names,
    summary_names: Names,
    subset: Option<&'a [usize]>,
}

impl<P: Problem + ?Sized> Ctx<'_, P> {
    fn particle(&self, theta: Vec<f64>, s: Vec<f64>) -> Option<Particle> {
        if theta.len() != self.param_names.len() || s.len() != self.summary_names.len() {
            return None;
        }
        if s.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let rho_full = self.metric.eval(&s, self.observed, None);
        let rho_marginal = self.subset.map(|idx| self.metric.eval(&s, self.observed, Some(idx)));
        Some(Particle {
            theta: ParamVector {
                values: theta,
                names: self.param_names.clone(),
            },
            summaries: SummaryVector {
                values: s,
                names: self.summary_names.clone(),
            },
            rho_full,
            rho_marginal,
        })
    }

    fn simulate(&self, theta: Vec<f64>, rng: &mut StreamRng) -> Option<Particle> {
        let s = self.problem.simulate_summaries(&theta, rng).ok()?;
        self.particle(theta, s)
    }
}

/// One Metropolis–Hastings step of the ABC kernel with proposal
/// θ′ = θ + L·z, where L is the Cholesky factor of the proposal covariance.
/// Returns the resulting particle, whether the proposal was accepted, and
/// the number of simulations spent (0 or 1).
#[allow(clippy::too_many_arguments)]
pub fn mcmc_move<P: Problem + ?Sized>(
    particle: &Particle,
    constraints: &Constraints,
    proposal_chol: &DMatrix<f64>,
    problem: &P,
    observed: &SummaryVector,
    metric: &DistanceMetric,
    rng: &mut StreamRng,
) -> (Particle, bool, u64) {
    let subset = constraints.marginal.as_ref().map(|(idx, _)| idx.as_slice());
    let ctx = Ctx {
        problem,
        observed: &observed.values,
        metric,
        param_names: particle.theta.names.clone(),
        summary_names: particle.summaries.names.clone(),
        subset,
    };
    let (next, accepted, sims) = move_step(&ctx, particle, constraints, proposal_chol, rng);
    (next.unwrap_or_else(|| particle.clone()), accepted, sims)
}

fn move_step<P: Problem + ?Sized>(
    ctx: &Ctx<'_, P>,
    current: &Particle,
    constraints: &Constraints,
    chol: &DMatrix<f64>,
    rng: &mut StreamRng,
) -> (Option<Particle>, bool, u64) {
    let p = current.theta.values.len();
    let z = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let step = chol * z;
    let proposal: Vec<f64> = current
        .theta
        .values
        .iter()
        .zip(step.iter())
        .map(|(t, d)| t + d)
        .collect();
    let u: f64 = rng.random();
    let prior_new = ctx.problem.prior_density(&proposal);
    if !(prior_new > 0.0) {
        return (None, false, 0);
    }
    let prior_old = ctx.problem.prior_density(&current.theta.values);
    if u > prior_new / prior_old {
        return (None, false, 0);
    }
    match ctx.simulate(proposal, rng) {
        Some(cand) if constraints.admits(cand.rho_full, cand.rho_marginal) => (Some(cand), true, 1),
        _ => (None, false, 1),
    }
}

/// Which discrepancy a run reduces.
#[derive(Debug, Clone, PartialEq)]
pub enum Reduce {
    Full,
    /// Reduce the marginal discrepancy; `frozen_full`, when present, is a
    /// full-summary tolerance kept fixed throughout.
    Marginal {
        subset: MarginalSubset,
        frozen_full: Option<f64>,
    },
}

/// Weighted Euclidean metric with 1/MAD² weights from `n_sims`
/// prior-predictive simulations. Failed simulations are skipped.
pub fn calibrate_metric<P: Problem + ?Sized>(
    problem: &P,
    n_sims: usize,
    stream: &RandomStream,
) -> Result<DistanceMetric> {
    let base = stream.derive(tag::METRIC);
    let d = problem.summary_names().len();
    let rows: Vec<Vec<f64>> = (0..n_sims as u64)
        .into_par_iter()
        .filter_map(|i| {
            let mut rng = base.derive(i).rng();
            let theta = problem.prior_sample(&mut rng);
            problem
                .simulate_summaries(&theta, &mut rng)
                .ok()
                .filter(|s| s.len() == d && s.iter().all(|v| v.is_finite()))
        })
        .collect();
    DistanceMetric::from_mad(&rows)
}

fn check_observed<P: Problem + ?Sized>(problem: &P, observed: &SummaryVector) -> Result<()> {
    let names = problem.summary_names();
    if observed.len() != names.len() {
        return Err(Error::DimensionMismatch {
            left: observed.len(),
            right: names.len(),
        });
    }
    if observed.names.iter().ne(names.iter()) {
        return Err(Error::NameMismatch);
    }
    Ok(())
}

fn metric_dim_mismatch(d: usize, metric: Option<&DistanceMetric>) -> Option<Error> {
    match metric.and_then(DistanceMetric::dimension) {
        Some(m) if m != d => Some(Error::DimensionMismatch { left: d, right: m }),
        _ => None,
    }
}

/// N particles from the prior, each redrawn until its summaries are valid.
/// Returns the population (tolerances set to the largest discrepancies)
/// and the simulations used.
pub fn prior_population<P: Problem + ?Sized>(
    problem: &P,
    observed: &SummaryVector,
    metric: &DistanceMetric,
    n_particles: usize,
    marginal: Option<MarginalSubset>,
    max_simulations: u64,
    stream: &RandomStream,
) -> Result<(Population, u64)> {
    check_observed(problem, observed)?;
    if let Some(e) = metric_dim_mismatch(observed.len(), Some(metric)) {
        return Err(e);
    }
    if n_particles < 2 {
        return Err(Error::InvalidArgument("need at least two particles".into()));
    }
    let ctx = Ctx {
        problem,
        observed: &observed.values,
        metric,
        param_names: problem.param_names(),
        summary_names: problem.summary_names(),
        subset: marginal.as_ref().map(|m| m.indices.as_slice()),
    };
    let base = stream.derive(tag::INIT);
    let drawn: Vec<(Option<Particle>, u64)> = (0..n_particles as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = base.derive(i).rng();
            for attempt in 1..=MAX_INIT_REDRAWS as u64 {
                let theta = problem.prior_sample(&mut rng);
                if let Some(p) = ctx.simulate(theta, &mut rng) {
                    return (Some(p), attempt);
                }
            }
            (None, MAX_INIT_REDRAWS as u64)
        })
        .collect();
    let sims: u64 = drawn.iter().map(|(_, s)| s).sum();
    if sims > max_simulations {
        return Err(Error::BudgetExhausted {
            budget: max_simulations,
        });
    }
    let particles = drawn
        .into_iter()
        .map(|(p, _)| p.ok_or_else(|| Error::DegenerateSample("prior draws never produced valid summaries".into())))
        .collect::<Result<Vec<_>>>()?;
    let max_full = particles.iter().map(|p| p.rho_full).fold(0.0, f64::max);
    let (epsilon_full, epsilon_marginal) = match &marginal {
        None => (max_full, None),
        Some(_) => (
            f64::INFINITY,
            Some(particles.iter().filter_map(|p| p.rho_marginal).fold(0.0, f64::max)),
        ),
    };
    let pop = Population {
        particles,
        epsilon_full,
        epsilon_marginal,
        marginal,
        metric: metric.clone(),
        seed_lineage: *stream,
    };
    pop.validate()?;
    Ok((pop, sims))
}

/// Plain SMC-ABC on the full summaries, starting from the prior.
pub fn smc_abc<P: Problem + ?Sized>(
    problem: &P,
    observed: &SummaryVector,
    metric: &DistanceMetric,
    config: &SmcConfig,
    stop: StoppingRule,
    stream: &RandomStream,
) -> Result<(Population, SmcTrace)> {
    config.validate()?;
    let (pop, sims) = prior_population(
        problem,
        observed,
        metric,
        config.n_particles,
        None,
        stop.max_simulations,
        stream,
    )?;
    run_smc(pop, Reduce::Full, problem, observed, config, stop, stream, sims)
}

/// SMC-ABC matching only the summaries of one marginal subset, from the prior.
pub fn smc_abc_marginal<P: Problem + ?Sized>(
    problem: &P,
    observed: &SummaryVector,
    metric: &DistanceMetric,
    subset: MarginalSubset,
    config: &SmcConfig,
    stop: StoppingRule,
    stream: &RandomStream,
) -> Result<(Population, SmcTrace)> {
    config.validate()?;
    let (pop, sims) = prior_population(
        problem,
        observed,
        metric,
        config.n_particles,
        Some(subset.clone()),
        stop.max_simulations,
        stream,
    )?;
    let reduce = Reduce::Marginal {
        subset,
        frozen_full: None,
    };
    run_smc(pop, reduce, problem, observed, config, stop, stream, sims)
}

fn reduced(p: &Particle, marginal: bool) -> f64 {
    if marginal {
        p.rho_marginal.expect("marginal discrepancy attached")
    } else {
        p.rho_full
    }
}

/// Cholesky factor of 2·Cov(survivors), with diagonal jitter if singular.
fn proposal_factor(survivors: &[&Particle]) -> DMatrix<f64> {
    let p = survivors[0].theta.values.len();
    let n = survivors.len() as f64;
    let mut mean = DVector::zeros(p);
    for s in survivors {
        mean += DVector::from_column_slice(&s.theta.values);
    }
    mean /= n;
    let mut cov = DMatrix::zeros(p, p);
    for s in survivors {
        let d = DVector::from_column_slice(&s.theta.values) - &mean;
        cov += &d * d.transpose();
    }
    cov *= 2.0 / (n - 1.0);
    let scale = (cov.trace() / p as f64).max(1e-300);
    let mut jitter = 0.0;
    for _ in 0..30 {
        let m = &cov + DMatrix::identity(p, p) * jitter;
        if let Some(c) = m.cholesky() {
            return c.l();
        }
        jitter = if jitter == 0.0 { 1e-12 * scale } else { jitter * 10.0 };
    }
    // every survivor identical: fall back to a tiny isotropic step
    DMatrix::identity(p, p) * 1e-6
}

struct Mover {
    slot: usize,
    particle: Particle,
    rng: StreamRng,
    accepted: u64,
    sims: u64,
}

/// Continue SMC-ABC from `pop`, reducing the discrepancy chosen by `reduce`.
/// `sims_used` counts simulations already charged against the budget.
#[allow(clippy::too_many_arguments)]
pub fn run_smc<P: Problem + ?Sized>(
    mut pop: Population,
    reduce: Reduce,
    problem: &P,
    observed: &SummaryVector,
    config: &SmcConfig,
    stop: StoppingRule,
    stream: &RandomStream,
    sims_used: u64,
) -> Result<(Population, SmcTrace)> {
    config.validate()?;
    check_observed(problem, observed)?;
    if pop.len() != config.n_particles {
        return Err(Error::DimensionMismatch {
            left: pop.len(),
            right: config.n_particles,
        });
    }
    let marginal = matches!(reduce, Reduce::Marginal { .. });
    if let Reduce::Marginal { subset, frozen_full } = &reduce {
        if pop.particles.iter().any(|p| p.rho_marginal.is_none()) {
            return Err(Error::InvalidArgument("particles lack marginal discrepancies".into()));
        }
        pop.marginal = Some(subset.clone());
        pop.epsilon_full = frozen_full.unwrap_or(f64::INFINITY);
        if pop.epsilon_marginal.is_none() {
            pop.epsilon_marginal = pop.particles.iter().filter_map(|p| p.rho_marginal).reduce(f64::max);
        }
    }
    pop.seed_lineage = *stream;
    pop.validate()?;

    let n = config.n_particles;
    let keep = n - config.n_dropped();
    let m = n - keep;
    let metric = pop.metric.clone();
    let ctx = Ctx {
        problem,
        observed: &observed.values,
        metric: &metric,
        param_names: pop.param_names(),
        summary_names: pop.summary_names(),
        subset: pop.marginal.as_ref().map(|s| s.indices.as_slice()),
    };
    let mut sims = sims_used;
    let mut records = Vec::new();
    let mut r_prev = 2usize;
    let stop_reason = loop {
        let iteration = records.len() + 1;
        let budget_left = stop.max_simulations.saturating_sub(sims);
        if budget_left < m as u64 {
            if records.is_empty() {
                return Err(Error::BudgetExhausted {
                    budget: stop.max_simulations,
                });
            }
            break StopReason::Budget;
        }

        // eliminate
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            cmp_f64(
                &reduced(&pop.particles[a], marginal),
                &reduced(&pop.particles[b], marginal),
            )
            .then(a.cmp(&b))
        });
        let epsilon = reduced(&pop.particles[order[keep - 1]], marginal);
        let survivors: Vec<Particle> = order[..keep].iter().map(|&i| pop.particles[i].clone()).collect();

        // resample into the freed slots
        let mut rs = stream.derive(tag::RESAMPLE).derive(iteration as u64).rng();
        let copies: Vec<Particle> = (0..m).map(|_| survivors[rs.random_range(0..keep)].clone()).collect();

        let constraints = match &reduce {
            Reduce::Full => Constraints {
                epsilon_full: Some(epsilon),
                marginal: None,
            },
            Reduce::Marginal { subset, frozen_full } => Constraints {
                epsilon_full: *frozen_full,
                marginal: Some((subset.indices.clone(), epsilon)),
            },
        };
        let chol = proposal_factor(&survivors.iter().collect::<Vec<_>>());
        let move_base = stream.derive(tag::MOVE).derive(iteration as u64);
        let mut movers: Vec<Mover> = copies
            .into_iter()
            .enumerate()
            .map(|(j, particle)| Mover {
                slot: keep + j,
                particle,
                rng: move_base.derive((keep + j) as u64).rng(),
                accepted: 0,
                sims: 0,
            })
            .collect();

        let run_phase = |movers: &mut Vec<Mover>, steps: usize| {
            movers.par_iter_mut().for_each(|mv| {
                for _ in 0..steps {
                    let (next, ok, s) = move_step(&ctx, &mv.particle, &constraints, &chol, &mut mv.rng);
                    mv.sims += s;
                    if ok {
                        mv.accepted += 1;
                        mv.particle = next.expect("accepted move carries a particle");
                    }
                }
            });
        };

        let trial = r_prev.div_ceil(2).min(config.max_repeats);
        let trial = trial.min((budget_left / m as u64) as usize).max(1);
        run_phase(&mut movers, trial);
        let accepted: u64 = movers.iter().map(|v| v.accepted).sum();
        let trial_acc = accepted as f64 / (m * trial) as f64;
        let (target, clamped) = adaptive_repeats(trial_acc, config.mcmc_target_miss, config.max_repeats);
        let spent: u64 = movers.iter().map(|v| v.sims).sum();
        let left_after = budget_left - spent;
        let extra = target.saturating_sub(trial).min((left_after / m as u64) as usize);
        run_phase(&mut movers, extra);
        let repeats = trial + extra;
        let accepted: u64 = movers.iter().map(|v| v.accepted).sum();
        let acc_rate = accepted as f64 / (m * repeats) as f64;
        sims += movers.iter().map(|v| v.sims).sum::<u64>();
        r_prev = repeats;

        let mut particles = survivors;
        particles.resize(n, particles[0].clone());
        for mv in movers {
            particles[mv.slot] = mv.particle;
        }
        pop.particles = particles;
        if marginal {
            pop.epsilon_marginal = Some(epsilon);
        } else {
            pop.epsilon_full = epsilon;
        }
        pop.validate()?;
        records.push(IterationRecord {
            iteration,
            epsilon,
            epsilon_full: pop.epsilon_full,
            acc_rate,
            repeats,
            repeats_clamped: clamped && repeats == config.max_repeats,
            simulations: sims,
        });
        if acc_rate < stop.min_acc_rate || stop.min_acc_rate >= 1.0 {
            break StopReason::AcceptanceRate;
        }
        if repeats < target {
            break StopReason::Budget;
        }
    };
    Ok((
        pop,
        SmcTrace {
            records,
            stop_reason,
            simulations: sims,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Composed, NormalHyper, NormalModel};
    use crate::summaries::{NormalSufficient, SummaryStatistic};
    use crate::types::names;

    /// θ ~ U(0,1)², summaries θ + N(0, 0.1²) noise.
    struct Toy;

    impl Problem for Toy {
        fn param_names(&self) -> Names {
            names(&["x", "y"])
        }
        fn summary_names(&self) -> Names {
            names(&["sx", "sy"])
        }
        fn prior_sample(&self, rng: &mut StreamRng) -> Vec<f64> {
            vec![rng.random(), rng.random()]
        }
        fn prior_density(&self, t: &[f64]) -> f64 {
            crate::models::uniform_box_density(t, 0.0, 1.0)
        }
        fn simulate_summaries(&self, t: &[f64], rng: &mut StreamRng) -> Result<Vec<f64>> {
            Ok(t.iter()
                .map(|v| v + 0.1 * rng.sample::<f64, _>(StandardNormal))
                .collect())
        }
    }

    fn toy_obs() -> SummaryVector {
        SummaryVector::from_pairs(&[("sx", 0.4), ("sy", 0.6)]).unwrap()
    }

    fn small_config() -> SmcConfig {
        SmcConfig {
            n_particles: 200,
            stop_acc_rate: 0.05,
            max_simulations: 200_000,
            ..SmcConfig::default()
        }
    }

    #[test]
    fn repeats_formula() {
        assert_eq!(adaptive_repeats(1.0, 0.01, 100), (1, false));
        assert_eq!(adaptive_repeats(0.5, 0.01, 100), (7, false));
        assert_eq!(adaptive_repeats(0.01, 0.01, 1000), (459, false));
        assert_eq!(adaptive_repeats(0.01, 0.01, 100), (100, true));
        assert_eq!(adaptive_repeats(0.0, 0.01, 100), (100, true));
    }

    #[test]
    fn config_validation() {
        assert!(SmcConfig::default().validate().is_ok());
        let bad = SmcConfig {
            n_particles: 1,
            ..SmcConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SmcConfig {
            drop_fraction: 1.0,
            ..SmcConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn first_iteration_keeps_half() {
        let cfg = SmcConfig {
            stop_acc_rate: 1.0,
            ..small_config()
        };
        let stream = RandomStream::root(7);
        let metric = DistanceMetric::Euclidean;
        let (init, _) = prior_population(&Toy, &toy_obs(), &metric, 200, None, u64::MAX, &stream).unwrap();
        let mut rhos: Vec<f64> = init.particles.iter().map(|p| p.rho_full).collect();
        rhos.sort_by(cmp_f64);
        let (pop, trace) = smc_abc(
            &Toy,
            &toy_obs(),
            &metric,
            &cfg,
            StoppingRule::from_config(&cfg),
            &stream,
        )
        .unwrap();
        assert_eq!(trace.records.len(), 1);
        assert_eq!(trace.records[0].epsilon, rhos[99]);
        assert_eq!(pop.epsilon_full, rhos[99]);
        pop.validate().unwrap();
    }

    #[test]
    fn tolerances_nonincreasing_and_constraints_hold() {
        let cfg = small_config();
        let (pop, trace) = smc_abc(
            &Toy,
            &toy_obs(),
            &DistanceMetric::Euclidean,
            &cfg,
            StoppingRule::from_config(&cfg),
            &RandomStream::root(1),
        )
        .unwrap();
        assert!(trace.records.len() > 3);
        for w in trace.records.windows(2) {
            assert!(w[1].epsilon <= w[0].epsilon);
            assert!(w[1].simulations > w[0].simulations);
        }
        assert!(trace.simulations <= cfg.max_simulations);
        pop.validate().unwrap();
        let mx = crate::stats::mean(&pop.column("x").unwrap());
        assert!((mx - 0.4).abs() < 0.05, "{mx}");
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let cfg = small_config();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| {
                    smc_abc(
                        &Toy,
                        &toy_obs(),
                        &DistanceMetric::Euclidean,
                        &cfg,
                        StoppingRule::from_config(&cfg),
                        &RandomStream::root(3),
                    )
                    .unwrap()
                })
        };
        let (a, ta) = run(1);
        let (b, tb) = run(3);
        assert_eq!(a.particles, b.particles);
        assert_eq!(ta, tb);
    }

    #[test]
    fn budget_limits() {
        let cfg = small_config();
        let stop = StoppingRule {
            min_acc_rate: 0.0001,
            max_simulations: 5_000,
        };
        let (_, trace) = smc_abc(
            &Toy,
            &toy_obs(),
            &DistanceMetric::Euclidean,
            &cfg,
            stop,
            &RandomStream::root(2),
        )
        .unwrap();
        assert_eq!(trace.stop_reason, StopReason::Budget);
        assert!(trace.simulations <= 5_000);
        let tiny = StoppingRule {
            min_acc_rate: 0.01,
            max_simulations: 150,
        };
        assert!(matches!(
            smc_abc(
                &Toy,
                &toy_obs(),
                &DistanceMetric::Euclidean,
                &cfg,
                tiny,
                &RandomStream::root(2)
            ),
            Err(Error::BudgetExhausted { .. })
        ));
    }

    #[test]
    fn move_rejects_outside_prior_and_keeps_bookkeeping() {
        let stream = RandomStream::root(4);
        let metric = DistanceMetric::Euclidean;
        let (pop, _) = prior_population(&Toy, &toy_obs(), &metric, 10, None, u64::MAX, &stream).unwrap();
        let p = &pop.particles[0];
        let far = DMatrix::identity(2, 2) * 1e3;
        let loose = Constraints {
            epsilon_full: Some(f64::INFINITY),
            marginal: None,
        };
        let mut rng = stream.derive(99).rng();
        let mut rejected = 0;
        for _ in 0..50 {
            let (q, ok, sims) = mcmc_move(p, &loose, &far, &Toy, &toy_obs(), &metric, &mut rng);
            if !ok {
                assert_eq!(&q, p);
                assert_eq!(sims, 0);
                rejected += 1;
            }
        }
        assert!(rejected > 45);

        // flat target: in-support proposals always accepted
        let near = DMatrix::identity(2, 2) * 1e-4;
        let mut acc = 0;
        for _ in 0..500 {
            let (q, ok, _) = mcmc_move(p, &loose, &near, &Toy, &toy_obs(), &metric, &mut rng);
            if ok {
                acc += 1;
                let rho = metric.eval(&q.summaries.values, &toy_obs().values, None);
                assert_eq!(rho, q.rho_full);
            }
        }
        assert!(acc >= 495, "{acc}");
    }

    #[test]
    fn frozen_infinity_equals_unconstrained() {
        let cfg = small_config();
        let stream = RandomStream::root(5);
        let metric = DistanceMetric::Euclidean;
        let subset = MarginalSubset {
            param: "x".into(),
            indices: vec![0],
        };
        let (init, _) =
            prior_population(&Toy, &toy_obs(), &metric, 200, Some(subset.clone()), u64::MAX, &stream).unwrap();
        let stop = StoppingRule::from_config(&cfg);
        let go = |frozen| {
            run_smc(
                init.clone(),
                Reduce::Marginal {
                    subset: subset.clone(),
                    frozen_full: frozen,
                },
                &Toy,
                &toy_obs(),
                &cfg,
                stop,
                &stream.derive(1),
                0,
            )
            .unwrap()
        };
        let (a, ta) = go(None);
        let (b, tb) = go(Some(f64::INFINITY));
        assert_eq!(a.particles, b.particles);
        assert_eq!(ta, tb);
    }

    #[test]
    fn normal_model_runs() {
        let model = NormalModel::new(10, NormalHyper::default()).unwrap();
        let problem = Composed::new(model, NormalSufficient);
        let obs = NormalSufficient
            .summarize(&vec![0.3, -0.2, 1.1, 0.5, -0.9, 0.0, 0.4, 1.6, -0.3, 0.7])
            .unwrap();
        let stream = RandomStream::root(6);
        let metric = calibrate_metric(&problem, 500, &stream).unwrap();
        let cfg = small_config();
        let (pop, _) = smc_abc(&problem, &obs, &metric, &cfg, StoppingRule::from_config(&cfg), &stream).unwrap();
        pop.validate().unwrap();
    }

    #[test]
    fn trace_csv_shape() {
        let t = SmcTrace {
            records: vec![IterationRecord {
                iteration: 1,
                epsilon: 0.5,
                epsilon_full: 0.5,
                acc_rate: 0.25,
                repeats: 3,
                repeats_clamped: false,
                simulations: 100,
            }],
            stop_reason: StopReason::AcceptanceRate,
            simulations: 100,
        };
        let csv = t.to_csv();
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.ends_with('\n'));
    }
}
