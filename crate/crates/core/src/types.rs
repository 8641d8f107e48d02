//! Domain values shared by every stage of the sampler.

use std::sync::Arc;

use crate::distance::DistanceMetric;
use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// Shared, immutable list of labels.
pub type Names = Arc<[String]>;

pub fn names<S: AsRef<str>>(labels: &[S]) -> Names {
    labels.iter().map(|s| s.as_ref().to_string()).collect()
}

fn check_labelled(values: &[f64], names: &Names, what: &str) -> Result<()> {
    if values.len() != names.len() {
        return Err(Error::DimensionMismatch {
            left: values.len(),
            right: names.len(),
        });
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "{what} component `{}` is not finite ({})",
            names[i], values[i]
        )));
    }
    Ok(())
}

/// A parameter draw θ with its component labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    pub values: Vec<f64>,
    pub names: Names,
}

impl ParamVector {
    pub fn new(values: Vec<f64>, names: Names) -> Result<Self> {
        check_labelled(&values, &names, "parameter")?;
        Ok(Self { values, names })
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Observed or simulated summary statistics with their labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryVector {
    pub values: Vec<f64>,
    pub names: Names,
}

impl SummaryVector {
    pub fn new(values: Vec<f64>, names: Names) -> Result<Self> {
        check_labelled(&values, &names, "summary")?;
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(Error::InvalidArgument(format!("duplicate summary name `{n}`")));
            }
        }
        Ok(Self { values, names })
    }

    /// Builds from names given as string slices.
    pub fn from_pairs(pairs: &[(&str, f64)]) -> Result<Self> {
        let names: Names = pairs.iter().map(|(n, _)| n.to_string()).collect();
        Self::new(pairs.iter().map(|(_, v)| *v).collect(), names)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Sub-vector at the given positions, in the given order.
    pub fn select(&self, indices: &[usize]) -> SummaryVector {
        SummaryVector {
            values: indices.iter().map(|&i| self.values[i]).collect(),
            names: indices.iter().map(|&i| self.names[i].clone()).collect(),
        }
    }
}

/// The marginal summary subset a run is matching on.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalSubset {
    pub param: String,
    pub indices: Vec<usize>,
}

/// One SMC-ABC particle.
#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub theta: ParamVector,
    pub summaries: SummaryVector,
    /// Discrepancy on the full summary vector.
    pub rho_full: f64,
    /// Discrepancy on the marginal subset, when a subset is active.
    pub rho_marginal: Option<f64>,
}

/// Equally weighted particle set plus the tolerances it satisfies.
#[derive(Debug, Clone)]
pub struct Population {
    pub particles: Vec<Particle>,
    /// Full-summary tolerance; `f64::INFINITY` when the full summaries are
    /// not constrained (marginal-only runs).
    pub epsilon_full: f64,
    pub epsilon_marginal: Option<f64>,
    pub marginal: Option<MarginalSubset>,
    pub metric: DistanceMetric,
    pub seed_lineage: RandomStream,
}

impl Population {
    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn param_names(&self) -> Names {
        self.particles[0].theta.names.clone()
    }

    pub fn summary_names(&self) -> Names {
        self.particles[0].summaries.names.clone()
    }

    pub fn param_index(&self, name: &str) -> Result<usize> {
        self.particles[0]
            .theta
            .names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownParameter(name.to_string()))
    }

    /// All particle values of one parameter.
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let i = self.param_index(name)?;
        Ok(self.particles.iter().map(|p| p.theta.values[i]).collect())
    }

    /// Checks the tolerance invariants; an error names the first offender.
    pub fn validate(&self) -> Result<()> {
        if self.particles.len() < 2 {
            return Err(Error::Invariant(format!(
                "population needs at least 2 particles, has {}",
                self.particles.len()
            )));
        }
        for (i, p) in self.particles.iter().enumerate() {
            if !(p.rho_full <= self.epsilon_full) {
                return Err(Error::Invariant(format!(
                    "particle {i}: rho_full {} exceeds epsilon {}",
                    p.rho_full, self.epsilon_full
                )));
            }
            if let Some(eps) = self.epsilon_marginal {
                match p.rho_marginal {
                    Some(r) if r <= eps => {}
                    other => {
                        return Err(Error::Invariant(format!(
                            "particle {i}: rho_marginal {other:?} exceeds epsilon_marginal {eps}"
                        )))
                    }
                }
            }
        }
        Ok(())
    }
}
