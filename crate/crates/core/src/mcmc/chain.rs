use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::RegularGraph;
use crate::model::ModelSpec;

/// Heat-bath chain on independent sets, started from the empty set.
#[derive(Clone, Debug)]
pub struct ChainState {
    pub occupied: Vec<bool>,
    /// Number of included neighbours of each node.
    pub counts: Vec<usize>,
    pub seed: u64,
    pub stream: u64,
    pub sweeps: u64,
    rng: ChaCha8Rng,
    order: Vec<usize>,
}

impl ChainState {
    pub fn new(graph: &RegularGraph, seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self {
            occupied: vec![false; graph.n()],
            counts: vec![0; graph.n()],
            seed,
            stream,
            sweeps: 0,
            rng,
            order: (0..graph.n()).collect(),
        }
    }

    pub fn is_independent(&self, graph: &RegularGraph) -> bool {
        (0..graph.n())
            .all(|v| !self.occupied[v] || graph.neighbors(v).iter().all(|&u| !self.occupied[u]))
    }

    pub fn counts_consistent(&self, graph: &RegularGraph) -> bool {
        (0..graph.n()).all(|v| {
            self.counts[v]
                == graph
                    .neighbors(v)
                    .iter()
                    .filter(|&&u| self.occupied[u])
                    .count()
        })
    }

    /// Occupancy as a bit mask (node `v` is bit `v`); for graphs with at most
    /// 64 nodes.
    pub fn mask(&self) -> u64 {
        self.occupied
            .iter()
            .enumerate()
            .fold(0, |m, (v, &o)| if o { m | (1 << v) } else { m })
    }
}

/// Consecutive ratios `θ_{m+1}/θ_m` and `λ/θ_0`, precomputed per model.
#[derive(Clone, Debug)]
pub struct FlipWeights {
    base: f64,
    ratio: Vec<f64>,
}

impl FlipWeights {
    pub fn new(model: &ModelSpec) -> Self {
        let t = model.theta.values();
        Self {
            base: model.lambda / t[0],
            ratio: t.windows(2).map(|w| w[1] / w[0]).collect(),
        }
    }

    /// `r = (λ/θ_0) Π_u θ_{m_u+1}/θ_{m_u}` over the neighbours' included
    /// counts `m_u`, not counting the flipped node itself.
    pub fn ratio(&self, neighbor_counts: impl IntoIterator<Item = usize>) -> f64 {
        neighbor_counts
            .into_iter()
            .fold(self.base, |r, m| r * self.ratio[m])
    }
}

/// One heat-bath pass over all nodes in a fresh random order. A node with
/// an included neighbour stays excluded; otherwise it is included with
/// probability `r/(1+r)`.
pub fn heat_bath_sweep(weights: &FlipWeights, graph: &RegularGraph, state: &mut ChainState) {
    let mut order = std::mem::take(&mut state.order);
    order.shuffle(&mut state.rng);
    for &v in &order {
        let nbrs = graph.neighbors(v);
        let included = state.occupied[v];
        if !included && state.counts[v] > 0 {
            continue;
        }
        let shift = usize::from(included);
        let r = weights.ratio(nbrs.iter().map(|&u| state.counts[u] - shift));
        let include = state.rng.gen::<f64>() * (1.0 + r) < r;
        if include != included {
            state.occupied[v] = include;
            for &u in nbrs {
                if include {
                    state.counts[u] += 1;
                } else {
                    state.counts[u] -= 1;
                }
            }
        }
    }
    state.order = order;
    state.sweeps += 1;
    debug_assert!(state.is_independent(graph));
}
