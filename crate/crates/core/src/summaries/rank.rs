use crate::error::{Error, Result};
use crate::special::normal_quantile;
use crate::stats::cmp_f64;

/// Average ranks (1-based) with ties sharing the mean of their positions.
fn average_ranks(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| cmp_f64(&x[a], &x[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Normal score Φ⁻¹(rank/(n+1)), evaluated on the lower half and reflected
/// so that reversed ranks give exactly negated scores.
fn normal_score(rank: f64, n: usize) -> f64 {
    let m = n as f64 + 1.0;
    if 2.0 * rank > m {
        -normal_quantile((m - rank) / m)
    } else {
        normal_quantile(rank / m)
    }
}

/// Pearson correlation of the normal scores of each margin's ranks.
pub fn gaussian_rank_correlation(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 pairs, got {n}")));
    }
    let scores = |v: &[f64]| -> Vec<f64> {
        let s: Vec<f64> = average_ranks(v).into_iter().map(|r| normal_score(r, n)).collect();
        let m = s.iter().sum::<f64>() / n as f64;
        s.into_iter().map(|v| v - m).collect()
    };
    let (sx, sy) = (scores(x), scores(y));
    let sxx: f64 = sx.iter().map(|v| v * v).sum();
    let syy: f64 = sy.iter().map(|v| v * v).sum();
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::DegenerateSample("constant margin in rank correlation".into()));
    }
    let sxy: f64 = sx.iter().zip(&sy).map(|(a, b)| a * b).sum();
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}
