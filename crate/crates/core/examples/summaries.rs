//! The summary statistics on their own: octiles, autocovariances, the
//! Gaussian rank correlation and Huber regression.

use marginal_abc::rng::RandomStream;
use marginal_abc::summaries::autocov::autocovariance_values;
use marginal_abc::summaries::octiles::octile_values;
use marginal_abc::summaries::{gaussian_rank_correlation, huber_regression, HUBER_K};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

fn main() -> marginal_abc::Result<()> {
    let mut rng = RandomStream::root(3).rng();
    let z: Vec<f64> = (0..50_000).map(|_| rng.sample(StandardNormal)).collect();
    println!("octile summaries of N(0,1): {:.4?}", octile_values(&z)?);
    println!("autocovariances, lags 0..2: {:.4?}", autocovariance_values(&z, 2)?);

    let y: Vec<f64> = z
        .iter()
        .map(|v| 0.6 * v + 0.8 * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let warped: Vec<f64> = z.iter().map(|v| v.exp()).collect();
    println!(
        "rank correlation {:.4}, after exp() on one margin {:.4}",
        gaussian_rank_correlation(&z, &y)?,
        gaussian_rank_correlation(&warped, &y)?
    );

    let n = 300;
    let x = DMatrix::from_fn(n, 2, |_, _| rng.sample::<f64, _>(StandardNormal));
    let resp: Vec<f64> = (0..n)
        .map(|i| {
            let e: f64 = rng.sample(StandardNormal);
            let outlier = if i % 20 == 0 { 15.0 } else { 0.0 };
            2.0 * x[(i, 0)] - x[(i, 1)] + e + outlier
        })
        .collect();
    for k in [HUBER_K, 1e6] {
        let fit = huber_regression(&x, &resp, k)?;
        println!("huber k = {k:<8} beta {:.4?} sigma {:.4}", fit.beta, fit.sigma);
    }
    Ok(())
}
