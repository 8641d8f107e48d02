//! Kernel density estimates and total-variation distances between two
//! posterior samples, plus the report format used by `compare`.

use marginal_abc::diagnostics::{kde_1d, marginal_record, sample_tv, shared_grid};
use marginal_abc::rng::RandomStream;
use rand::Rng;
use rand_distr::StandardNormal;

fn main() -> marginal_abc::Result<()> {
    let mut rng = RandomStream::root(11).rng();
    let gold: Vec<f64> = (0..2000).map(|_| rng.sample(StandardNormal)).collect();
    let wide: Vec<f64> = (0..2000).map(|_| 1.8 * rng.sample::<f64, _>(StandardNormal)).collect();
    let shifted: Vec<f64> = (0..2000).map(|_| 0.5 + rng.sample::<f64, _>(StandardNormal)).collect();

    let grid = shared_grid(&gold, &wide)?;
    let kde = kde_1d(&gold, &grid)?;
    println!("gold KDE on {} points, mode {:.3}", grid.len(), kde.mode());
    println!("TV(gold, wide) = {:.3}", sample_tv(&gold, &wide)?);
    println!("TV(gold, shifted) = {:.3}", sample_tv(&gold, &shifted)?);
    let record = marginal_record("shifted", &shifted, &gold)?;
    println!("{}", serde_json::to_string_pretty(&record)?);
    Ok(())
}
