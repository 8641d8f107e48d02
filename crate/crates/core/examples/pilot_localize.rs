//! Pilot run on all summaries, then a continuation on θ₁'s summaries alone.
//! Compares mass near the second MA(2) root with a θ₁-only run.

use marginal_abc::diagnostics::mass_in_ball;
use marginal_abc::experiment::{build_setup, ExperimentConfig, ExperimentId};
use marginal_abc::localize::{localize, pilot_run, LocalizeConfig};
use marginal_abc::rng::RandomStream;
use marginal_abc::smc::{calibrate_metric, smc_abc_marginal, SmcConfig, StoppingRule};
use marginal_abc::stats::mean;
use marginal_abc::types::{names, MarginalSubset, ParamVector};

fn main() -> marginal_abc::Result<()> {
    let config = ExperimentConfig::new(ExperimentId::Ma2, 5).reduced_n().resolved()?;
    let setup = build_setup(&config)?;
    let problem = &*setup.problem;
    let root = RandomStream::root(config.seed);
    let metric = calibrate_metric(problem, 1000, &root)?;
    let smc = SmcConfig {
        n_particles: 500,
        max_simulations: 150_000,
        ..SmcConfig::default()
    };
    let centre = ParamVector::new(vec![0.4860, 0.7591], names(&["theta1", "theta2"]))?;

    let subset = MarginalSubset {
        param: "theta1".into(),
        indices: setup.set.indices("theta1")?,
    };
    let stop = StoppingRule::from_config(&smc);
    let (only, _) = smc_abc_marginal(problem, &setup.observed, &metric, subset, &smc, stop, &root.derive(1))?;

    let pilot = pilot_run(problem, &setup.observed, &metric, &smc, 0.30, &root)?;
    println!(
        "pilot stopped at eps0 = {:.4} after {} iterations",
        pilot.epsilon0,
        pilot.trace.records.len()
    );
    let (pop, trace) = localize(
        &pilot,
        &setup.set,
        "theta1",
        &setup.observed,
        problem,
        &smc,
        &LocalizeConfig::new(0.30),
        &root,
    )?;
    println!(
        "continuation: {} iterations, final eps_theta1 {:.4}",
        trace.records.len(),
        pop.epsilon_marginal.unwrap_or(f64::NAN)
    );

    for (label, p) in [("theta1 summaries only", &only), ("pilot + continuation", &pop)] {
        println!(
            "{label:<22} theta1 mean {:.3}, mass near second root {:.3}",
            mean(&p.column("theta1")?),
            mass_in_ball(p, &centre, 0.15)?
        );
    }
    Ok(())
}
