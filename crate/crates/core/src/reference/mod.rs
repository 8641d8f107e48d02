//! Exact and numerically exact reference quantities.

pub mod laplace;
pub mod ma2;
pub mod normal;

use std::fmt::Write as _;

use crate::error::{Error, Result};

pub use laplace::{laplace_idealized_summaries, LaplaceFit, LaplaceIdealized};
pub use ma2::{ma2_alternate_root, ma2_binding, s3_asymptotic_check, AlternateRoot, S3Report};
pub use normal::{normal_exact_marginals, normal_exact_marginals_with, NormalMarginals, DEFAULT_GRID_POINTS};

/// Trapezoid rule over an ascending grid.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xw, yw)| 0.5 * (xw[1] - xw[0]) * (yw[0] + yw[1]))
        .sum()
}

/// `n` equally spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + step * i as f64 })
        .collect()
}

/// A density tabulated on a strictly ascending 1-D grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub points: Vec<f64>,
    pub density: Vec<f64>,
    pub normalized: bool,
}

impl DensityGrid {
    pub fn new(points: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        if points.len() != density.len() {
            return Err(Error::DimensionMismatch {
                left: points.len(),
                right: density.len(),
            });
        }
        if points.len() < 2 {
            return Err(Error::GridMismatch("a grid needs at least two points".into()));
        }
        if points.windows(2).any(|w| !(w[1] > w[0])) || points.iter().any(|p| !p.is_finite()) {
            return Err(Error::GridMismatch(
                "grid points must be finite and strictly ascending".into(),
            ));
        }
        if density.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(Error::InvalidArgument(
                "densities must be finite and nonnegative".into(),
            ));
        }
        Ok(Self {
            points,
            density,
            normalized: false,
        })
    }

    /// Unnormalised log-density values, shifted by their maximum before
    /// exponentiation, then normalised.
    pub fn from_log_density(points: Vec<f64>, log_density: &[f64]) -> Result<Self> {
        let mx = log_density.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !mx.is_finite() {
            return Err(Error::InvalidArgument("log density has no finite maximum".into()));
        }
        let density = log_density.iter().map(|l| (l - mx).exp()).collect();
        Self::new(points, density)?.normalize()
    }

    pub fn integral(&self) -> f64 {
        trapezoid(&self.points, &self.density)
    }

    pub fn normalize(mut self) -> Result<Self> {
        let z = self.integral();
        if !(z > 0.0 && z.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "cannot normalise a density with integral {z}"
            )));
        }
        self.density.iter_mut().for_each(|d| *d /= z);
        self.normalized = true;
        Ok(self)
    }

    fn moment(&self, f: impl Fn(f64) -> f64) -> f64 {
        let y: Vec<f64> = self.points.iter().zip(&self.density).map(|(x, d)| f(*x) * d).collect();
        trapezoid(&self.points, &y) / self.integral()
    }

    pub fn mean(&self) -> f64 {
        self.moment(|x| x)
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.moment(|x| (x - m) * (x - m))
    }

    pub fn sd(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Grid point of highest density.
    pub fn mode(&self) -> f64 {
        let i = (0..self.density.len())
            .max_by(|&a, &b| crate::stats::cmp_f64(&self.density[a], &self.density[b]).then(b.cmp(&a)))
            .expect("nonempty grid");
        self.points[i]
    }

    /// Piecewise-linear interpolation, zero outside the grid.
    pub fn eval(&self, x: f64) -> f64 {
        let p = &self.points;
        if x < p[0] || x > p[p.len() - 1] {
            return 0.0;
        }
        let i = p.partition_point(|&v| v <= x).clamp(1, p.len() - 1);
        let t = (x - p[i - 1]) / (p[i] - p[i - 1]);
        self.density[i - 1] + t * (self.density[i] - self.density[i - 1])
    }

    /// The same density interpolated onto `points`, renormalised.
    pub fn resample(&self, points: &[f64]) -> Result<DensityGrid> {
        DensityGrid::new(points.to_vec(), points.iter().map(|&x| self.eval(x)).collect())?.normalize()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("point,density\n");
        for (x, d) in self.points.iter().zip(&self.density) {
            let _ = writeln!(out, "{x:e},{d:e}");
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<DensityGrid> {
        let mut lines = text.lines();
        match lines.next() {
            Some("point,density") => {}
            other => return Err(Error::Parse(format!("unexpected grid header {other:?}"))),
        }
        let (mut points, mut density) = (Vec::new(), Vec::new());
        for (i, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
            let (a, b) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("grid row {}: expected two fields", i + 1)))?;
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("grid row {}: {e}", i + 1)))
            };
            points.push(parse(a)?);
            density.push(parse(b)?);
        }
        DensityGrid::new(points, density)
    }
}
