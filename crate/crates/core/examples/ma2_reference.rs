//! MA(2) binding function, the second invertible parameter value with the
//! same lag-0 and lag-1 autocovariances, and a Monte Carlo look at the lag-2
//! statistic.

use marginal_abc::reference::{ma2_alternate_root, ma2_binding, s3_asymptotic_check, AlternateRoot};
use marginal_abc::rng::RandomStream;

fn main() -> marginal_abc::Result<()> {
    let theta = [0.9, -0.05];
    println!("binding function at {theta:?}: {:?}", ma2_binding(&theta));
    match ma2_alternate_root(&theta)? {
        AlternateRoot::Root(p) => println!("second root {:.4?} with binding {:?}", p.values, ma2_binding(&p.values)),
        AlternateRoot::Unique => println!("no second invertible root"),
    }
    let report = s3_asymptotic_check(&theta, 10_000, 500, &RandomStream::root(2))?;
    println!(
        "lag-2 statistic: mean {:.5} (se {:.5}), variance {:.3e}; claimed {:.3e}, Bartlett {:.3e}",
        report.mean, report.mean_se, report.variance, report.claimed_variance, report.bartlett_variance
    );
    Ok(())
}
