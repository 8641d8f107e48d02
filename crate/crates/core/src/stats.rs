//! Small descriptive-statistics helpers shared by summaries and diagnostics.

use std::cmp::Ordering;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (divisor n − 1).
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub fn std_dev(xs: &[f64]) -> f64 {
    variance(xs).sqrt()
}

/// Total order on finite floats; NaN sorts last.
pub fn cmp_f64(a: &f64, b: &f64) -> Ordering {
    a.partial_cmp(b).unwrap_or_else(|| a.is_nan().cmp(&b.is_nan()))
}

/// Zero-based (lower index, fraction) for the linear-interpolation quantile
/// with plotting position p·(n−1)+1.
pub fn quantile_position(n: usize, p: f64) -> (usize, f64) {
    let h = p * (n as f64 - 1.0);
    let lo = h.floor() as usize;
    (lo.min(n - 1), h - h.floor())
}

/// Interpolated quantile from order statistics `lo_val` ≤ `hi_val`.
pub fn interpolate(lo_val: f64, hi_val: f64, frac: f64) -> f64 {
    if frac == 0.0 {
        lo_val
    } else {
        lo_val + frac * (hi_val - lo_val)
    }
}

/// Quantile of an already sorted slice.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let (lo, frac) = quantile_position(n, p);
    let hi = (lo + 1).min(n - 1);
    interpolate(sorted[lo], sorted[hi], frac)
}

/// Values of the requested order statistics (zero-based ranks, any order).
///
/// Reorders `data` in place; runs in expected O(n · log k) via nested
/// quickselect instead of a full sort.
pub fn order_statistics(data: &mut [f64], ranks: &[usize]) -> Vec<f64> {
    let mut wanted: Vec<usize> = ranks.to_vec();
    wanted.sort_unstable();
    wanted.dedup();
    select_many(data, 0, &wanted);
    ranks.iter().map(|&r| data[r]).collect()
}

fn select_many(data: &mut [f64], offset: usize, ranks: &[usize]) {
    if ranks.is_empty() || data.is_empty() {
        return;
    }
    let mid = ranks.len() / 2;
    let pivot = ranks[mid] - offset;
    data.select_nth_unstable_by(pivot, cmp_f64);
    let (left, rest) = data.split_at_mut(pivot);
    select_many(left, offset, &ranks[..mid]);
    select_many(&mut rest[1..], offset + pivot + 1, &ranks[mid + 1..]);
}

/// Several interpolated quantiles in one selection pass.
pub fn quantiles(data: &mut [f64], probs: &[f64]) -> Vec<f64> {
    let n = data.len();
    let positions: Vec<(usize, f64)> = probs.iter().map(|&p| quantile_position(n, p)).collect();
    let mut ranks = Vec::with_capacity(2 * probs.len());
    for &(lo, _) in &positions {
        ranks.push(lo);
        ranks.push((lo + 1).min(n - 1));
    }
    let vals = order_statistics(data, &ranks);
    positions
        .iter()
        .enumerate()
        .map(|(i, &(_, frac))| interpolate(vals[2 * i], vals[2 * i + 1], frac))
        .collect()
}

pub fn median(xs: &[f64]) -> f64 {
    let mut buf = xs.to_vec();
    quantiles(&mut buf, &[0.5])[0]
}

/// Median absolute deviation about the median (unscaled).
pub fn mad(xs: &[f64]) -> f64 {
    let m = median(xs);
    let dev: Vec<f64> = xs.iter().map(|x| (x - m).abs()).collect();
    median(&dev)
}

/// Interquartile range with the same interpolation rule.
pub fn iqr(xs: &[f64]) -> f64 {
    let mut buf = xs.to_vec();
    let q = quantiles(&mut buf, &[0.25, 0.75]);
    q[1] - q[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn quantile_rule_matches_hand_values() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile_sorted(&xs, 0.5), 3.0);
        assert_eq!(quantile_sorted(&xs, 0.25), 2.0);
        assert_eq!(quantile_sorted(&xs, 0.125), 1.5);
        assert_eq!(quantile_sorted(&xs, 1.0), 5.0);
        assert_eq!(quantile_sorted(&xs, 0.0), 1.0);
    }

    #[test]
    fn mad_of_simple_sample() {
        assert_eq!(mad(&[1.0, 2.0, 3.0, 4.0, 100.0]), 1.0);
    }

    proptest! {
        #[test]
        fn selection_agrees_with_sorting(
            mut xs in proptest::collection::vec(-1e3f64..1e3, 2..200),
            probs in proptest::collection::vec(0.0f64..=1.0, 1..9),
        ) {
            let mut sorted = xs.clone();
            sorted.sort_by(cmp_f64);
            let expected: Vec<f64> = probs.iter().map(|&p| quantile_sorted(&sorted, p)).collect();
            let got = quantiles(&mut xs, &probs);
            prop_assert_eq!(got, expected);
        }
    }
}
