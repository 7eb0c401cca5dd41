use num_traits::ToPrimitive;

use super::{FiniteGraph, Potentials, Weight};
use crate::error::{MrfError, Result};
use crate::model::{ModelSpec, NeighborDistribution};

/// Largest number of unpinned nodes brute-force enumeration accepts.
pub const ENUMERATION_BUDGET: usize = 26;

/// Total weight of a graph's independent sets, with inclusion mass per node.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedCount<T> {
    pub z: T,
    pub log_z: f64,
    /// `included[v]` = total weight of the sets containing `v`.
    pub included: Vec<T>,
}

/// Calls `visit(occupancy, weight)` for every independent set agreeing with
/// `pins` (`Some(true)` forces inclusion, `Some(false)` exclusion).
///
/// The weight is `Π_v φ(v)`: nodes of degree `Δ` contribute `λ` when
/// included and `θ_k` when excluded with `k` included neighbours; every
/// other node contributes 1.
pub fn for_each_independent_set<T, F>(
    graph: &FiniteGraph,
    pot: &Potentials<T>,
    pins: &[Option<bool>],
    mut visit: F,
) -> Result<()>
where
    T: Weight,
    F: FnMut(&[bool], &T),
{
    let n = graph.n();
    if pins.len() != n {
        return Err(MrfError::LengthMismatch {
            expected: n,
            got: pins.len(),
        });
    }
    let free = pins.iter().filter(|p| p.is_none()).count();
    if free > ENUMERATION_BUDGET {
        return Err(MrfError::BudgetExceeded {
            free,
            limit: ENUMERATION_BUDGET,
        });
    }
    // pinned-included nodes must themselves form an independent set
    for &(u, v) in graph.edges() {
        if pins[u] == Some(true) && pins[v] == Some(true) {
            return Ok(());
        }
    }
    let mut occ = vec![false; n];
    descend(graph, pot, pins, 0, &mut occ, &mut visit);
    Ok(())
}

fn descend<T: Weight, F: FnMut(&[bool], &T)>(
    graph: &FiniteGraph,
    pot: &Potentials<T>,
    pins: &[Option<bool>],
    v: usize,
    occ: &mut Vec<bool>,
    visit: &mut F,
) {
    if v == occ.len() {
        visit(occ, &set_weight(graph, pot, occ));
        return;
    }
    if pins[v] != Some(true) {
        occ[v] = false;
        descend(graph, pot, pins, v + 1, occ, visit);
    }
    if pins[v] != Some(false) {
        // earlier neighbours are decided; later pinned-included ones would clash
        let blocked = graph
            .neighbors(v)
            .iter()
            .any(|&u| (u < v && occ[u]) || (u > v && pins[u] == Some(true)));
        if !blocked {
            occ[v] = true;
            descend(graph, pot, pins, v + 1, occ, visit);
            occ[v] = false;
        }
    }
}

fn set_weight<T: Weight>(graph: &FiniteGraph, pot: &Potentials<T>, occ: &[bool]) -> T {
    let delta = pot.delta();
    let mut w = T::one();
    for v in 0..occ.len() {
        if graph.degree(v) != delta {
            continue;
        }
        if occ[v] {
            w = w * pot.lambda.clone();
        } else {
            let k = graph.neighbors(v).iter().filter(|&&u| occ[u]).count();
            w = w * pot.theta[k].clone();
        }
    }
    w
}

/// All independent sets with their weights, in enumeration order.
pub fn independent_sets<T: Weight>(
    graph: &FiniteGraph,
    pot: &Potentials<T>,
) -> Result<Vec<(Vec<bool>, T)>> {
    let mut out = Vec::new();
    for_each_independent_set(graph, pot, &vec![None; graph.n()], |occ, w| {
        out.push((occ.to_vec(), w.clone()))
    })?;
    Ok(out)
}

/// Partition function and per-node inclusion masses, optionally with pins.
pub fn enumerate_z_pinned<T: Weight + ToPrimitive>(
    graph: &FiniteGraph,
    pot: &Potentials<T>,
    pins: &[Option<bool>],
) -> Result<WeightedCount<T>> {
    let mut z = T::zero();
    let mut included = vec![T::zero(); graph.n()];
    for_each_independent_set(graph, pot, pins, |occ, w| {
        z = z.clone() + w.clone();
        for (v, &o) in occ.iter().enumerate() {
            if o {
                included[v] = included[v].clone() + w.clone();
            }
        }
    })?;
    let log_z = z.to_f64().map_or(f64::NAN, f64::ln);
    Ok(WeightedCount { z, log_z, included })
}

/// Exact partition function of `graph` under `model`.
pub fn enumerate_z(model: &ModelSpec, graph: &FiniteGraph) -> Result<WeightedCount<f64>> {
    enumerate_z_pinned(
        graph,
        &Potentials::from_model(model),
        &vec![None; graph.n()],
    )
}

/// Root statistics: `masses[k]` is the weight of sets with `root` excluded
/// and exactly `k` included neighbours, `plus` the weight with `root` included.
#[derive(Clone, Debug, PartialEq)]
pub struct RootMasses<T> {
    pub masses: Vec<T>,
    pub plus: T,
}

impl<T: Weight> RootMasses<T> {
    pub fn total(&self) -> T {
        self.masses
            .iter()
            .fold(self.plus.clone(), |a, b| a + b.clone())
    }

    /// `(p_0..p_Δ, p_+)` normalized by the total.
    pub fn probabilities(&self) -> (Vec<T>, T) {
        let total = self.total();
        let p = self
            .masses
            .iter()
            .map(|m| m.clone() / total.clone())
            .collect();
        (p, self.plus.clone() / total)
    }
}

pub fn root_masses<T: Weight>(
    graph: &FiniteGraph,
    pot: &Potentials<T>,
    pins: &[Option<bool>],
    root: usize,
) -> Result<RootMasses<T>> {
    let deg = graph.degree(root);
    let mut masses = vec![T::zero(); deg + 1];
    let mut plus = T::zero();
    for_each_independent_set(graph, pot, pins, |occ, w| {
        if occ[root] {
            plus = plus.clone() + w.clone();
        } else {
            let k = graph.neighbors(root).iter().filter(|&&u| occ[u]).count();
            masses[k] = masses[k].clone() + w.clone();
        }
    })?;
    Ok(RootMasses { masses, plus })
}

/// Exact included-neighbour law of excluded degree-`Δ` nodes, averaged over
/// those nodes, plus the average inclusion probability of a degree-`Δ` node.
pub fn small_graph_neighbor_law(
    model: &ModelSpec,
    graph: &FiniteGraph,
) -> Result<(NeighborDistribution, f64)> {
    let delta = model.delta();
    let pot = Potentials::from_model(model);
    let nodes: Vec<usize> = (0..graph.n())
        .filter(|&v| graph.degree(v) == delta)
        .collect();
    if nodes.is_empty() {
        return Err(MrfError::Precondition(format!(
            "graph has no node of degree {delta}"
        )));
    }
    let mut excluded = vec![0.0; delta + 1];
    let mut plus = 0.0;
    let mut z = 0.0;
    for_each_independent_set(graph, &pot, &vec![None; graph.n()], |occ, w| {
        z += w;
        for &v in &nodes {
            if occ[v] {
                plus += w;
            } else {
                let k = graph.neighbors(v).iter().filter(|&&u| occ[u]).count();
                excluded[k] += w;
            }
        }
    })?;
    let law = NeighborDistribution::from_weights(&excluded)?;
    Ok((law, plus / (z * nodes.len() as f64)))
}
