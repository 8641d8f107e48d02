//! Simulate one dataset from each model at its default parameters and print
//! the observed summaries the experiments condition on.

use marginal_abc::experiment::{build_setup, ExperimentConfig, ExperimentId};

fn main() -> marginal_abc::Result<()> {
    for id in ExperimentId::ALL {
        let config = ExperimentConfig::new(id, 1).reduced_n().resolved()?;
        let setup = build_setup(&config)?;
        println!("{id} at {:?}", setup.true_theta.values);
        for (name, value) in setup.observed.names.iter().zip(&setup.observed.values) {
            println!("  {name:>10} = {value:.5}");
        }
    }
    Ok(())
}
