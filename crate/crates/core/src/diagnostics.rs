//! Kernel density estimates, total-variation distances and simple
//! population probes for comparing posterior approximations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::PopulationTable;
use crate::reference::{linspace, trapezoid, DensityGrid};
use crate::special::normal_pdf;
use crate::stats;
use crate::types::{ParamVector, Population};

/// Points on the shared comparison grid.
pub const TV_GRID_POINTS: usize = 512;
const GRID_PAD_BANDWIDTHS: f64 = 3.0;

/// 0.9·min(SD, IQR/1.349)·n^(−1/5); falls back to the SD when the IQR is 0.
pub fn silverman_bandwidth(samples: &[f64]) -> Result<f64> {
    if samples.len() < 10 {
        return Err(Error::InvalidArgument(format!(
            "KDE needs at least 10 samples, got {}",
            samples.len()
        )));
    }
    let sd = stats::std_dev(samples);
    if !(sd > 0.0) {
        return Err(Error::DegenerateSample("samples have zero spread".into()));
    }
    let iqr = stats::iqr(samples) / 1.349;
    let spread = if iqr > 0.0 { sd.min(iqr) } else { sd };
    Ok(0.9 * spread * (samples.len() as f64).powf(-0.2))
}

/// Gaussian-kernel density estimate evaluated on `grid`, normalised there.
pub fn kde_1d(samples: &[f64], grid: &[f64]) -> Result<DensityGrid> {
    let h = silverman_bandwidth(samples)?;
    kde_with_bandwidth(samples, grid, h)
}

pub fn kde_with_bandwidth(samples: &[f64], grid: &[f64], h: f64) -> Result<DensityGrid> {
    let mut sorted = samples.to_vec();
    sorted.sort_by(stats::cmp_f64);
    // kernels beyond 10 bandwidths contribute below 1e-22 of their peak
    let reach = 10.0 * h;
    let scale = 1.0 / (sorted.len() as f64 * h);
    let density = grid
        .iter()
        .map(|&x| {
            let lo = sorted.partition_point(|&s| s < x - reach);
            let hi = sorted.partition_point(|&s| s <= x + reach);
            sorted[lo..hi].iter().map(|&s| normal_pdf((x - s) / h)).sum::<f64>() * scale
        })
        .collect();
    DensityGrid::new(grid.to_vec(), density)?.normalize()
}

/// 512 points spanning both sample ranges padded by 3 bandwidths (the
/// larger of the two).
pub fn shared_grid(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let h = silverman_bandwidth(a)?.max(silverman_bandwidth(b)?);
    let lo = a.iter().chain(b).cloned().fold(f64::INFINITY, f64::min) - GRID_PAD_BANDWIDTHS * h;
    let hi = a.iter().chain(b).cloned().fold(f64::NEG_INFINITY, f64::max) + GRID_PAD_BANDWIDTHS * h;
    Ok(linspace(lo, hi, TV_GRID_POINTS))
}

/// ½∫|a − b| by the trapezoid rule on a common grid.
pub fn total_variation(a: &DensityGrid, b: &DensityGrid) -> Result<f64> {
    if a.points != b.points {
        return Err(Error::GridMismatch("densities are tabulated on different grids".into()));
    }
    let d: Vec<f64> = a.density.iter().zip(&b.density).map(|(x, y)| (x - y).abs()).collect();
    Ok((0.5 * trapezoid(&a.points, &d)).clamp(0.0, 1.0))
}

/// TV between the KDEs of two samples on their shared grid.
pub fn sample_tv(a: &[f64], b: &[f64]) -> Result<f64> {
    let grid = shared_grid(a, b)?;
    total_variation(&kde_1d(a, &grid)?, &kde_1d(b, &grid)?)
}

/// TV between the KDE of a sample and a reference density, on the shared
/// grid of the sample and the reference grid's range.
pub fn sample_vs_density_tv(samples: &[f64], reference: &DensityGrid) -> Result<f64> {
    let h = silverman_bandwidth(samples)?;
    let lo = samples.iter().cloned().fold(reference.points[0], f64::min) - GRID_PAD_BANDWIDTHS * h;
    let hi = samples
        .iter()
        .cloned()
        .fold(reference.points[reference.points.len() - 1], f64::max)
        + GRID_PAD_BANDWIDTHS * h;
    let grid = linspace(lo, hi, TV_GRID_POINTS.max(reference.points.len()));
    total_variation(&kde_with_bandwidth(samples, &grid, h)?, &reference.resample(&grid)?)
}

/// Fraction of particles within Euclidean `radius` of `center`, measured in
/// the coordinates named by `center`.
pub fn mass_in_ball(pop: &Population, center: &ParamVector, radius: f64) -> Result<f64> {
    table_mass_in_ball(&PopulationTable::from(pop), center, radius)
}

pub fn table_mass_in_ball(table: &PopulationTable, center: &ParamVector, radius: f64) -> Result<f64> {
    let idx: Vec<usize> = center
        .names
        .iter()
        .map(|n| {
            table
                .param_names
                .iter()
                .position(|p| p == n)
                .ok_or_else(|| Error::UnknownParameter(n.clone()))
        })
        .collect::<Result<_>>()?;
    let r2 = radius * radius;
    let inside = table
        .theta
        .iter()
        .filter(|row| {
            let d2: f64 = idx.iter().zip(&center.values).map(|(&i, c)| (row[i] - c).powi(2)).sum();
            d2 <= r2
        })
        .count();
    Ok(inside as f64 / table.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub name: String,
    pub value: f64,
}

/// One labelled approximation of one parameter's marginal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalRecord {
    pub label: String,
    pub tv_vs_gold: f64,
    pub post_mean: f64,
    pub post_sd: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub probes: Vec<Probe>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamComparison {
    pub param: String,
    pub records: Vec<MarginalRecord>,
}

impl ParamComparison {
    pub fn record(&self, label: &str) -> Option<&MarginalRecord> {
        self.records.iter().find(|r| r.label == label)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub gold_label: String,
    pub params: Vec<ParamComparison>,
}

impl ComparisonReport {
    pub fn param(&self, name: &str) -> Option<&ParamComparison> {
        self.params.iter().find(|p| p.param == name)
    }

    pub fn tv(&self, param: &str, label: &str) -> Option<f64> {
        self.param(param)?.record(label).map(|r| r.tv_vs_gold)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Marginal summary of `samples` against the gold samples.
pub fn marginal_record(label: &str, samples: &[f64], gold: &[f64]) -> Result<MarginalRecord> {
    Ok(MarginalRecord {
        label: label.to_string(),
        tv_vs_gold: sample_tv(samples, gold)?,
        post_mean: stats::mean(samples),
        post_sd: stats::std_dev(samples),
        probes: Vec::new(),
    })
}
