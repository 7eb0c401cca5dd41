use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use super::theta::{binomial, is_log_convex_slice, ThetaVector};
use crate::error::{MrfError, Result};
use crate::numeric::log_sum_exp;

/// Probability vector over the number of included neighbours `0..=Δ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeighborDistribution {
    pub delta: usize,
    pub probs: Vec<f64>,
}

impl NeighborDistribution {
    /// Validates nonnegativity and unit mass (within `1e-12`).
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(MrfError::param("probs", "need at least two entries"));
        }
        if let Some(p) = probs.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
            return Err(MrfError::param(
                "probs",
                format!("entry {p} is not a probability"),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(MrfError::param(
                "probs",
                format!("mass is {total}, expected 1"),
            ));
        }
        Ok(Self {
            delta: probs.len() - 1,
            probs,
        })
    }

    /// Normalizes nonnegative weights.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(MrfError::param(
                "weights",
                format!("total weight {total} cannot be normalized"),
            ));
        }
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    /// Binomial law `B(Δ, p)`.
    pub fn binomial(delta: usize, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(MrfError::param("p", format!("{p} is not in [0, 1]")));
        }
        let w: Vec<f64> = (0..=delta)
            .map(|k| binomial(delta, k) * p.powi(k as i32) * (1.0 - p).powi((delta - k) as i32))
            .collect();
        Self::from_weights(&w)
    }

    /// Total-variation distance `½ Σ |a_k - b_k|`.
    pub fn tv_distance(&self, other: &Self) -> Result<f64> {
        if self.probs.len() != other.probs.len() {
            return Err(MrfError::LengthMismatch {
                expected: self.probs.len(),
                got: other.probs.len(),
            });
        }
        Ok(0.5
            * self
                .probs
                .iter()
                .zip(&other.probs)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>())
    }

    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(k, p)| k as f64 * p)
            .sum()
    }
}

/// Named potential families whose induced neighbour laws are classical.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Binomial,
    TruncatedPoisson,
    TruncatedGeometric,
}

impl Family {
    pub const ALL: [Family; 3] = [
        Family::Binomial,
        Family::TruncatedPoisson,
        Family::TruncatedGeometric,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Binomial => "binomial",
            Family::TruncatedPoisson => "truncated_poisson",
            Family::TruncatedGeometric => "truncated_geometric",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = MrfError;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| MrfError::UnknownFamily(s.to_string()))
    }
}

/// Potentials of a named family at degree `delta`.
///
/// binomial: all ones; truncated_poisson: `1 / (k! C(Δ,k))`;
/// truncated_geometric: `1 / C(Δ,k)`.
pub fn theta_for_family(family: Family, delta: usize) -> Result<ThetaVector> {
    if delta < 3 {
        return Err(MrfError::param(
            "delta",
            format!("must be >= 3, got {delta}"),
        ));
    }
    let values = (0..=delta)
        .map(|k| match family {
            Family::Binomial => 1.0,
            Family::TruncatedPoisson => {
                let fact: f64 = (1..=k).map(|i| i as f64).product();
                1.0 / (fact * binomial(delta, k))
            }
            Family::TruncatedGeometric => 1.0 / binomial(delta, k),
        })
        .collect();
    ThetaVector::new(values)
}

/// Looks up a family by its exact name.
pub fn theta_for_family_name(name: &str, delta: usize) -> Result<ThetaVector> {
    theta_for_family(name.parse()?, delta)
}

/// Neighbour law `μ(k) ∝ θ_k C(Δ,k) x^k`. The prefactor `c` only fixes the
/// unnormalized scale, so it is validated and otherwise absorbed by the
/// normalization.
pub fn induced_mu(theta: &ThetaVector, c: f64, x: f64) -> Result<NeighborDistribution> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(MrfError::param("c", format!("must be positive, got {c}")));
    }
    if !(x > 0.0) || !x.is_finite() {
        return Err(MrfError::param("x", format!("must be positive, got {x}")));
    }
    let d = theta.delta();
    let logs: Vec<f64> = (0..=d)
        .map(|k| theta.theta(k).ln() + binomial(d, k).ln() + k as f64 * x.ln())
        .collect();
    let z = log_sum_exp(&logs);
    let probs: Vec<f64> = logs.iter().map(|l| (l - z).exp()).collect();
    let total: f64 = probs.iter().sum();
    NeighborDistribution::new(probs.into_iter().map(|p| p / total).collect())
}

/// Whether `μ(k) / C(Δ,k)` is log-convex. Zero entries are rejected.
pub fn is_reverse_ultra_log_concave(mu: &NeighborDistribution) -> Result<bool> {
    if let Some(k) = mu.probs.iter().position(|p| *p <= 0.0) {
        return Err(MrfError::param(
            "mu",
            format!("entry {k} is zero; the predicate needs a positive law"),
        ));
    }
    let d = mu.delta;
    let scaled: Vec<f64> = mu
        .probs
        .iter()
        .enumerate()
        .map(|(k, p)| p / binomial(d, k))
        .collect();
    Ok(is_log_convex_slice(&scaled))
}
