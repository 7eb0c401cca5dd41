use std::collections::VecDeque;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{MrfError, Result};
use crate::oracle::FiniteGraph;

/// Restarts allowed before [`gen_random_regular`] gives up.
pub const MAX_GENERATION_ATTEMPTS: usize = 10_000;
// random partner draws before falling back to a full candidate scan
const PARTNER_DRAWS: usize = 64;

/// Simple `Δ`-regular graph with a flat neighbour array.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegularGraph {
    n: usize,
    delta: usize,
    adj: Vec<usize>,
    /// Girth measured after construction, `None` for a forest.
    pub girth_lower_bound: Option<usize>,
}

impl RegularGraph {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn delta(&self) -> usize {
        self.delta
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v * self.delta..(v + 1) * self.delta]
    }

    pub fn from_finite(g: &FiniteGraph) -> Result<Self> {
        let n = g.n();
        let delta = if n == 0 { 0 } else { g.degree(0) };
        if (0..n).any(|v| g.degree(v) != delta) {
            return Err(MrfError::Precondition("graph is not regular".into()));
        }
        let adj = (0..n)
            .flat_map(|v| g.neighbors(v).iter().copied())
            .collect();
        let mut out = Self {
            n,
            delta,
            adj,
            girth_lower_bound: None,
        };
        out.girth_lower_bound = out.girth();
        Ok(out)
    }

    pub fn to_finite(&self) -> FiniteGraph {
        let edges: Vec<_> = (0..self.n)
            .flat_map(|u| {
                self.neighbors(u)
                    .iter()
                    .filter(move |&&v| u < v)
                    .map(move |&v| (u, v))
            })
            .collect();
        FiniteGraph::new(self.n, &edges).expect("regular graph is simple")
    }

    /// Exact girth by breadth-first search from every node.
    pub fn girth(&self) -> Option<usize> {
        let mut best = usize::MAX;
        let mut dist = vec![usize::MAX; self.n];
        let mut parent = vec![usize::MAX; self.n];
        let mut queue = VecDeque::new();
        for s in 0..self.n {
            let mut touched = vec![s];
            dist[s] = 0;
            queue.push_back(s);
            'bfs: while let Some(u) = queue.pop_front() {
                if 2 * dist[u] + 1 >= best {
                    break;
                }
                for &w in self.neighbors(u) {
                    if dist[w] == usize::MAX {
                        dist[w] = dist[u] + 1;
                        parent[w] = u;
                        touched.push(w);
                        queue.push_back(w);
                    } else if parent[u] != w {
                        best = best.min(dist[u] + dist[w] + 1);
                        if best == 3 {
                            break 'bfs;
                        }
                    }
                }
            }
            queue.clear();
            for v in touched {
                dist[v] = usize::MAX;
                parent[v] = usize::MAX;
            }
            if best == 3 {
                break;
            }
        }
        (best != usize::MAX).then_some(best)
    }
}

/// Random `Δ`-regular graph on `n` nodes, deterministic in `seed`.
///
/// Half-edges are paired one at a time; a partner is admissible when the
/// new edge closes no cycle shorter than `max(min_girth, 3)`, which also
/// rules out loops and repeated edges. A dead end restarts the pairing.
pub fn gen_random_regular(
    n: usize,
    delta: usize,
    seed: u64,
    min_girth: Option<usize>,
) -> Result<RegularGraph> {
    if delta == 0 || n < delta + 1 {
        return Err(MrfError::Precondition(format!(
            "need n >= delta + 1, got n = {n}, delta = {delta}"
        )));
    }
    if !(n * delta).is_multiple_of(2) {
        return Err(MrfError::Precondition(format!(
            "n * delta must be even, got {n} * {delta}"
        )));
    }
    let girth = min_girth.unwrap_or(3).max(3);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairing = Pairing::new(n, delta);
    for _ in 0..MAX_GENERATION_ATTEMPTS {
        if let Some(adj) = pairing.attempt(girth, &mut rng) {
            let mut g = RegularGraph {
                n,
                delta,
                adj,
                girth_lower_bound: None,
            };
            g.girth_lower_bound = g.girth();
            return Ok(g);
        }
    }
    Err(MrfError::GenerationFailed {
        attempts: MAX_GENERATION_ATTEMPTS,
    })
}

struct Pairing {
    n: usize,
    delta: usize,
    lists: Vec<Vec<usize>>,
    stamp: Vec<u32>,
    epoch: u32,
    frontier: Vec<usize>,
}

impl Pairing {
    fn new(n: usize, delta: usize) -> Self {
        Self {
            n,
            delta,
            lists: vec![Vec::with_capacity(delta); n],
            stamp: vec![0; n],
            epoch: 0,
            frontier: Vec::new(),
        }
    }

    fn attempt<R: Rng>(&mut self, girth: usize, rng: &mut R) -> Option<Vec<usize>> {
        for l in &mut self.lists {
            l.clear();
        }
        let mut open: Vec<usize> = (0..self.n)
            .flat_map(|v| std::iter::repeat_n(v, self.delta))
            .collect();
        while !open.is_empty() {
            let i = rng.gen_range(0..open.len());
            let u = open.swap_remove(i);
            self.mark_ball(u, girth - 2);
            let mut pick = None;
            for _ in 0..PARTNER_DRAWS.min(open.len()) {
                let j = rng.gen_range(0..open.len());
                if !self.marked(open[j]) {
                    pick = Some(j);
                    break;
                }
            }
            if pick.is_none() {
                let admissible: Vec<usize> =
                    (0..open.len()).filter(|&j| !self.marked(open[j])).collect();
                if admissible.is_empty() {
                    return None;
                }
                pick = Some(admissible[rng.gen_range(0..admissible.len())]);
            }
            let v = open.swap_remove(pick.expect("partner chosen"));
            self.lists[u].push(v);
            self.lists[v].push(u);
        }
        Some(self.lists.iter().flatten().copied().collect())
    }

    // marks every node within distance `radius` of `u`
    fn mark_ball(&mut self, u: usize, radius: usize) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.fill(0);
            self.epoch = 1;
        }
        self.stamp[u] = self.epoch;
        self.frontier.clear();
        self.frontier.push(u);
        for _ in 0..radius {
            let layer = std::mem::take(&mut self.frontier);
            for &x in &layer {
                for &w in &self.lists[x] {
                    if self.stamp[w] != self.epoch {
                        self.stamp[w] = self.epoch;
                        self.frontier.push(w);
                    }
                }
            }
            if self.frontier.is_empty() {
                break;
            }
        }
    }

    fn marked(&self, v: usize) -> bool {
        self.stamp[v] == self.epoch
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_nodes_give_k4() {
        let g = gen_random_regular(4, 3, 11, None).unwrap();
        assert_eq!(g.to_finite().edges().len(), 6);
        assert_eq!(g.girth(), Some(3));
    }

    #[test]
    fn girth_five_on_ten_nodes() {
        let g = gen_random_regular(10, 3, 5, Some(5)).unwrap();
        assert_eq!(g.girth(), Some(5));
        assert_eq!(
            RegularGraph::from_finite(&FiniteGraph::petersen())
                .unwrap()
                .girth(),
            Some(5)
        );
    }

    #[test]
    fn preconditions() {
        assert!(gen_random_regular(5, 3, 0, None).is_err());
        assert!(gen_random_regular(3, 3, 0, None).is_err());
        assert!(RegularGraph::from_finite(&FiniteGraph::star(3)).is_err());
    }

    #[test]
    fn large_girth_graph_is_regular_and_reproducible() {
        let g = gen_random_regular(2000, 3, 42, Some(6)).unwrap();
        assert!(g.girth().unwrap() >= 6);
        let f = g.to_finite();
        assert!((0..g.n()).all(|v| f.degree(v) == 3));
        assert_eq!(g, gen_random_regular(2000, 3, 42, Some(6)).unwrap());
        assert_ne!(g, gen_random_regular(2000, 3, 43, Some(6)).unwrap());
        assert_eq!(
            RegularGraph::from_finite(&FiniteGraph::prism())
                .unwrap()
                .girth(),
            Some(3)
        );
    }
}
