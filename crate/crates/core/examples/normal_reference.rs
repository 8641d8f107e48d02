//! Exact marginal posteriors for the normal model and how SMC-ABC on the
//! sufficient summaries compares with them.

use marginal_abc::diagnostics::sample_vs_density_tv;
use marginal_abc::experiment::{run_requests, ExperimentConfig, ExperimentId, RunRequest, GOLD_LABEL};
use marginal_abc::stats::{mean, std_dev};

fn main() -> marginal_abc::Result<()> {
    let mut config = ExperimentConfig::new(ExperimentId::Normal, 1);
    config.smc.max_simulations = 200_000;
    let result = run_requests(&config, Some(&[RunRequest::Gold]))?;
    let exact = result.references.as_ref().expect("normal runs carry exact marginals");
    for (name, grid) in exact.named() {
        println!("{name:<18} mean {:>8.4}  sd {:.4}", grid.mean(), grid.sd());
    }
    for (param, grid) in [("mu", &exact.mu_given_ybar_s2), ("phi", &exact.phi_given_s2_ybar)] {
        let abc = result.column(GOLD_LABEL, param)?;
        println!(
            "ABC {param:<3} mean {:>8.4}  sd {:.4}  TV vs exact {:.3}",
            mean(&abc),
            std_dev(&abc),
            sample_vs_density_tv(&abc, grid)?
        );
    }
    Ok(())
}
