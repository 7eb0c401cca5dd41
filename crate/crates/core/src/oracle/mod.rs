//! Ground truth for small instances: brute-force enumeration of weighted
//! independent sets and the exact depth recursion for partition functions
//! of trees with layer-uniform boundary conditions.

mod dp;
mod enumerate;
mod graph;

use num_traits::Num;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

pub use dp::{
    boundary_pins, conditional_pk, conditional_pk_by_enumeration, conditional_pk_exact,
    dp_by_enumeration, dp_exact, dp_partition, dp_scaled, masses_to_f64, zeta_from_dp, DpValues,
    ScaledDp,
};
pub use enumerate::{
    enumerate_z, enumerate_z_pinned, for_each_independent_set, independent_sets, root_masses,
    small_graph_neighbor_law, RootMasses, WeightedCount, ENUMERATION_BUDGET,
};
pub use graph::{FiniteGraph, RootedTree};

use crate::error::MrfError;
use crate::model::ModelSpec;

/// Arithmetic the oracles run in: `f64` or exact rationals.
pub trait Weight: Clone + Num {}

impl<T: Clone + Num> Weight for T {}

/// `θ` and `λ` in the oracle's arithmetic.
#[derive(Clone, Debug, PartialEq)]
pub struct Potentials<T> {
    pub theta: Vec<T>,
    pub lambda: T,
}

impl<T> Potentials<T> {
    pub fn delta(&self) -> usize {
        self.theta.len() - 1
    }
}

impl Potentials<f64> {
    pub fn from_model(model: &ModelSpec) -> Self {
        Self {
            theta: model.theta.values().to_vec(),
            lambda: model.lambda,
        }
    }
}

/// Boundary condition on the bottom two layers of a depth-`d` tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Bottom layer included, the layer above it excluded.
    AllIncluded,
    /// Both bottom layers excluded.
    AllExcluded,
    /// No constraint.
    Free,
}

impl Boundary {
    pub const ALL: [Boundary; 3] = [Boundary::AllIncluded, Boundary::AllExcluded, Boundary::Free];

    pub fn as_str(self) -> &'static str {
        match self {
            Boundary::AllIncluded => "all_included",
            Boundary::AllExcluded => "all_excluded",
            Boundary::Free => "free",
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Boundary {
    type Err = MrfError;

    fn from_str(s: &str) -> Result<Self, MrfError> {
        Boundary::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| MrfError::UnsupportedBoundary(s.to_string()))
    }
}
