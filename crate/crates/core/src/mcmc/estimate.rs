use serde::{Deserialize, Serialize};

use super::chain::{heat_bath_sweep, ChainState, FlipWeights};
use super::RegularGraph;
use crate::error::{MrfError, Result};
use crate::model::{binomial, ModelSpec, NeighborDistribution, ThetaVector};
use crate::oracle::{for_each_independent_set, Potentials};

/// Batches per chain for batch-means standard errors.
pub const BATCHES_PER_CHAIN: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Total sweeps per chain, burn-in included.
    pub sweeps: u64,
    pub burn_in: u64,
    pub chains: usize,
    pub seed: u64,
    /// Sweeps between recorded samples.
    pub thin: u64,
}

impl SamplerConfig {
    pub const DEFAULT_BURN_IN: u64 = 100_000;
    pub const DEFAULT_THIN: u64 = 10;

    fn validate(&self) -> Result<()> {
        if self.sweeps <= self.burn_in {
            return Err(MrfError::param("sweeps", "must exceed burn_in"));
        }
        if self.chains == 0 || self.thin == 0 {
            return Err(MrfError::param(
                "chains",
                "chains and thin must be positive",
            ));
        }
        Ok(())
    }

    fn samples_per_chain(&self) -> u64 {
        (self.sweeps - self.burn_in) / self.thin
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeighborEstimate {
    /// Law of the included-neighbour count of excluded nodes, pooled.
    pub law: NeighborDistribution,
    pub inclusion: f64,
    /// Batch-means standard errors of `law.probs`.
    pub law_se: Vec<f64>,
    pub inclusion_se: f64,
    pub samples: u64,
    pub chains: usize,
}

#[derive(Clone, Debug, Default)]
struct Batch {
    hist: Vec<u64>,
    included: u64,
    samples: u64,
}

fn run_chains<T: Send, F>(config: &SamplerConfig, job: F) -> Vec<T>
where
    F: Fn(u64) -> T + Sync,
{
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..config.chains as u64)
            .map(|c| {
                let job = &job;
                s.spawn(move || job(c))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("chain thread panicked"))
            .collect()
    })
}

fn neighbor_chain(
    model: &ModelSpec,
    graph: &RegularGraph,
    config: &SamplerConfig,
    stream: u64,
) -> Vec<Batch> {
    let weights = FlipWeights::new(model);
    let mut state = ChainState::new(graph, config.seed, stream);
    let per_batch = config
        .samples_per_chain()
        .div_ceil(BATCHES_PER_CHAIN as u64)
        .max(1);
    let mut batches = Vec::new();
    let mut current = Batch {
        hist: vec![0; graph.delta() + 1],
        ..Batch::default()
    };
    for sweep in 1..=config.sweeps {
        heat_bath_sweep(&weights, graph, &mut state);
        if sweep <= config.burn_in || !(sweep - config.burn_in).is_multiple_of(config.thin) {
            continue;
        }
        for v in 0..graph.n() {
            if state.occupied[v] {
                current.included += 1;
            } else {
                current.hist[state.counts[v]] += 1;
            }
        }
        current.samples += 1;
        if current.samples == per_batch {
            let fresh = Batch {
                hist: vec![0; graph.delta() + 1],
                ..Batch::default()
            };
            batches.push(std::mem::replace(&mut current, fresh));
        }
    }
    if current.samples > 0 {
        batches.push(current);
    }
    batches
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Empirical included-neighbour law of excluded nodes, pooled over
/// independent chains run in parallel.
pub fn estimate_neighbor_law(
    model: &ModelSpec,
    graph: &RegularGraph,
    config: &SamplerConfig,
) -> Result<NeighborEstimate> {
    config.validate()?;
    if graph.delta() != model.delta() {
        return Err(MrfError::Precondition(format!(
            "graph degree {} differs from model degree {}",
            graph.delta(),
            model.delta()
        )));
    }
    let batches: Vec<Batch> = run_chains(config, |c| neighbor_chain(model, graph, config, c))
        .into_iter()
        .flatten()
        .collect();
    let delta = graph.delta();
    let mut total = vec![0u64; delta + 1];
    let (mut included, mut samples) = (0u64, 0u64);
    for b in &batches {
        for (t, h) in total.iter_mut().zip(&b.hist) {
            *t += h;
        }
        included += b.included;
        samples += b.samples;
    }
    let law =
        NeighborDistribution::from_weights(&total.iter().map(|&c| c as f64).collect::<Vec<_>>())?;
    let law_se = (0..=delta)
        .map(|k| {
            let props: Vec<f64> = batches
                .iter()
                .map(|b| b.hist[k] as f64 / b.hist.iter().sum::<u64>().max(1) as f64)
                .collect();
            mean_and_se(&props).1
        })
        .collect();
    let node_samples = |b: &Batch| (b.samples * graph.n() as u64) as f64;
    let dens: Vec<f64> = batches
        .iter()
        .map(|b| b.included as f64 / node_samples(b))
        .collect();
    Ok(NeighborEstimate {
        law,
        inclusion: included as f64 / (samples * graph.n() as u64) as f64,
        law_se,
        inclusion_se: mean_and_se(&dens).1,
        samples,
        chains: config.chains,
    })
}

/// Largest node count for which full state distributions are tabulated.
pub const MAX_TABULATED_NODES: usize = 20;

/// Empirical distribution of the whole configuration, indexed by occupancy
/// mask (node `v` is bit `v`).
pub fn empirical_state_distribution(
    model: &ModelSpec,
    graph: &RegularGraph,
    config: &SamplerConfig,
) -> Result<Vec<f64>> {
    config.validate()?;
    if graph.n() > MAX_TABULATED_NODES {
        return Err(MrfError::BudgetExceeded {
            free: graph.n(),
            limit: MAX_TABULATED_NODES,
        });
    }
    let counts = run_chains(config, |c| {
        let weights = FlipWeights::new(model);
        let mut state = ChainState::new(graph, config.seed, c);
        let mut counts = vec![0u64; 1 << graph.n()];
        for sweep in 1..=config.sweeps {
            heat_bath_sweep(&weights, graph, &mut state);
            if sweep > config.burn_in && (sweep - config.burn_in).is_multiple_of(config.thin) {
                counts[state.mask() as usize] += 1;
            }
        }
        counts
    });
    let mut total = vec![0u64; 1 << graph.n()];
    for c in counts {
        for (t, x) in total.iter_mut().zip(c) {
            *t += x;
        }
    }
    let n: u64 = total.iter().sum();
    Ok(total.into_iter().map(|c| c as f64 / n as f64).collect())
}

/// Exact stationary law, indexed like [`empirical_state_distribution`].
pub fn exact_state_distribution(model: &ModelSpec, graph: &RegularGraph) -> Result<Vec<f64>> {
    if graph.n() > MAX_TABULATED_NODES {
        return Err(MrfError::BudgetExceeded {
            free: graph.n(),
            limit: MAX_TABULATED_NODES,
        });
    }
    let finite = graph.to_finite();
    let mut probs = vec![0.0; 1 << graph.n()];
    for_each_independent_set(
        &finite,
        &Potentials::from_model(model),
        &vec![None; graph.n()],
        |occ, w| {
            let mask = occ
                .iter()
                .enumerate()
                .fold(0usize, |m, (v, &o)| if o { m | (1 << v) } else { m });
            probs[mask] = *w;
        },
    )?;
    let z: f64 = probs.iter().sum();
    Ok(probs.into_iter().map(|p| p / z).collect())
}

/// Total-variation distance between two probability vectors.
pub fn tv_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(MrfError::LengthMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>())
}

/// Least-squares fit of `ln μ(k) - ln(θ_k C(Δ,k)) = ln c + k ln x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MuFit {
    pub c: f64,
    pub x: f64,
    /// Root-mean-square residual of the log-linear fit.
    pub residual: f64,
    /// Indices left out because `μ(k) = 0`.
    pub masked: Vec<usize>,
}

pub fn fit_mu_shape(empirical: &NeighborDistribution, theta: &ThetaVector) -> Result<MuFit> {
    let delta = theta.delta();
    if empirical.delta != delta {
        return Err(MrfError::LengthMismatch {
            expected: delta + 1,
            got: empirical.delta + 1,
        });
    }
    let mut pts = Vec::new();
    let mut masked = Vec::new();
    for (k, &m) in empirical.probs.iter().enumerate() {
        if m > 0.0 {
            pts.push((
                k as f64,
                m.ln() - (theta.theta(k) * binomial(delta, k)).ln(),
            ));
        } else {
            masked.push(k);
        }
    }
    if pts.len() < 2 {
        return Err(MrfError::Precondition(
            "fewer than two positive entries to fit".into(),
        ));
    }
    let n = pts.len() as f64;
    let mk = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mk).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mk) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mk;
    let sse: f64 = pts.iter().map(|p| (p.1 - icpt - slope * p.0).powi(2)).sum();
    Ok(MuFit {
        c: icpt.exp(),
        x: slope.exp(),
        residual: (sse / n).sqrt(),
        masked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixed_point::limit_probabilities;
    use crate::mcmc::gen_random_regular;
    use crate::oracle::FiniteGraph;

    #[test]
    fn fit_recovers_analytic_shape() {
        let theta = ThetaVector::new(vec![1.0, 0.5, 0.5, 1.0]).unwrap();
        let m = ModelSpec::new(theta.clone(), 0.3).unwrap();
        let lp = limit_probabilities(&m).unwrap();
        let fit = fit_mu_shape(&lp.neighbor_law().unwrap(), &theta).unwrap();
        assert!(fit.residual < 1e-10);
        assert!((fit.x - lp.zeta).abs() < 1e-10);
        let mut swapped = lp.neighbor_law().unwrap().probs;
        swapped.swap(0, 2);
        let bad = fit_mu_shape(&NeighborDistribution::new(swapped).unwrap(), &theta).unwrap();
        assert!(bad.residual > 0.1);
    }

    #[test]
    fn fit_masks_zeros() {
        let law = NeighborDistribution::new(vec![0.25, 0.75, 0.0, 0.0]).unwrap();
        let fit = fit_mu_shape(&law, &ThetaVector::ones(3).unwrap()).unwrap();
        assert_eq!(fit.masked, vec![2, 3]);
    }

    #[test]
    fn prism_stationary_law() {
        let g = RegularGraph::from_finite(&FiniteGraph::prism()).unwrap();
        let m = ModelSpec::new(ThetaVector::new(vec![1.0, 0.7, 0.9, 1.6]).unwrap(), 1.3).unwrap();
        let cfg = SamplerConfig {
            sweeps: 200_000,
            burn_in: 1_000,
            chains: 2,
            seed: 5,
            thin: 10,
        };
        let emp = empirical_state_distribution(&m, &g, &cfg).unwrap();
        let exact = exact_state_distribution(&m, &g).unwrap();
        assert!(tv_distance(&emp, &exact).unwrap() < 0.02);
    }

    #[test]
    fn k4_neighbor_law() {
        let g = gen_random_regular(4, 3, 1, None).unwrap();
        let cfg = SamplerConfig {
            sweeps: 100_000,
            burn_in: 100,
            chains: 2,
            seed: 3,
            thin: 10,
        };
        let est = estimate_neighbor_law(&ModelSpec::hardcore(3, 1.0).unwrap(), &g, &cfg).unwrap();
        let target = NeighborDistribution::new(vec![0.25, 0.75, 0.0, 0.0]).unwrap();
        assert!(est.law.tv_distance(&target).unwrap() < 0.01);
        assert!((est.inclusion - 0.2).abs() < 0.01);
        assert!(est.law_se[1] > 0.0 && est.law_se[1] < 0.01);
    }

    #[test]
    fn config_validation() {
        let g = gen_random_regular(4, 3, 1, None).unwrap();
        let cfg = SamplerConfig {
            sweeps: 10,
            burn_in: 10,
            chains: 1,
            seed: 0,
            thin: 1,
        };
        assert!(estimate_neighbor_law(&ModelSpec::hardcore(3, 1.0).unwrap(), &g, &cfg).is_err());
        let cfg = SamplerConfig { sweeps: 20, ..cfg };
        assert!(estimate_neighbor_law(&ModelSpec::hardcore(4, 1.0).unwrap(), &g, &cfg).is_err());
    }
}
