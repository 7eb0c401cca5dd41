//! Second-order Markov random fields on independent sets of regular trees
//! and large-girth regular graphs.
//!
//! The [`model`] module holds potentials and the rational maps `f`, `g`,
//! `L`. [`fixed_point`] classifies uniqueness of the infinite-volume measure
//! through a two-equation system, [`recursion`] iterates the depth recursions
//! that bracket every boundary condition, [`phase`] evaluates explicit bounds
//! on the critical activity, and [`perturbation`] covers the expansion around
//! the hardcore model at its critical activity. [`oracle`] and [`mcmc`] are
//! independent checks: exact enumeration and dynamic programming on small
//! trees, and heat-bath sampling on random regular graphs.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fixed_point;
pub mod mcmc;
pub mod model;
pub mod numeric;
pub mod oracle;
pub mod perturbation;
pub mod phase;
pub mod recursion;

pub use error::{MrfError, Result};
pub use fixed_point::{FixedPointReport, Verdict};
pub use model::{Family, ModelSpec, NeighborDistribution, ThetaVector};
