//! Plain SMC-ABC on the MA(2) model with the first three autocovariances,
//! assembled from the low-level pieces.

use marginal_abc::models::{Composed, Ma2Model, Model};
use marginal_abc::rng::RandomStream;
use marginal_abc::smc::{calibrate_metric, smc_abc, SmcConfig, StoppingRule};
use marginal_abc::stats::{mean, std_dev};
use marginal_abc::summaries::{Autocovariances, SummaryStatistic};

fn main() -> marginal_abc::Result<()> {
    let model = Ma2Model::new(1000)?;
    let summary = Autocovariances::default();
    let y = model.simulate(&[0.6, 0.2], &mut RandomStream::new(41, 0xDA7A).rng())?;
    let observed = summary.summarize(&y)?;
    let problem = Composed::new(model, summary);

    let root = RandomStream::root(7);
    let metric = calibrate_metric(&problem, 1000, &root)?;
    let config = SmcConfig {
        n_particles: 500,
        max_simulations: 100_000,
        ..SmcConfig::default()
    };
    let (pop, trace) = smc_abc(
        &problem,
        &observed,
        &metric,
        &config,
        StoppingRule::from_config(&config),
        &root,
    )?;
    for r in &trace.records {
        println!(
            "iter {:>3}  eps {:.4}  acc {:.3}  sims {}",
            r.iteration, r.epsilon, r.acc_rate, r.simulations
        );
    }
    for name in ["theta1", "theta2"] {
        let c = pop.column(name)?;
        println!("{name}: mean {:.3} sd {:.3}", mean(&c), std_dev(&c));
    }
    Ok(())
}
