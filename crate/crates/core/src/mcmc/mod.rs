//! Heat-bath sampling of the field on random regular graphs, for comparing
//! local statistics of large-girth graphs with the tree predictions.

mod chain;
mod estimate;
mod graph;

pub use chain::{heat_bath_sweep, ChainState, FlipWeights};
pub use estimate::{
    empirical_state_distribution, estimate_neighbor_law, exact_state_distribution, fit_mu_shape,
    tv_distance, MuFit, NeighborEstimate, SamplerConfig, BATCHES_PER_CHAIN, MAX_TABULATED_NODES,
};
pub use graph::{gen_random_regular, RegularGraph, MAX_GENERATION_ATTEMPTS};
