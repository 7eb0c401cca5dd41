//! Depth recursions for the ratio `ζ_d(B)`: the lower/upper bounding
//! sequences that sandwich every boundary condition, the sequence of the
//! extremal boundary (bottom layer included), and finite-depth root laws.

use serde::{Deserialize, Serialize};

use crate::error::{MrfError, Result};
use crate::fixed_point::occupancy_from_ratios;
use crate::model::ModelSpec;
use crate::oracle::{zeta_from_dp, Boundary};
use crate::phase::lambda_lower;

/// First depth of the bounding sequences.
pub const START_DEPTH: usize = 5;
/// First depth of the extremal boundary sequence.
pub const EXTREMAL_START: usize = 3;
/// Default depth budget for limit extraction.
pub const DEFAULT_MAX_DEPTH: usize = 2000;
/// Terms that must agree within [`CAUCHY_TOL`] before a sequence is declared
/// converged.
pub const CAUCHY_RUN: usize = 20;
pub const CAUCHY_TOL: f64 = 1e-12;

/// `lower[i]`, `upper[i]` hold depth `START_DEPTH + i`; `extremal[i]` holds
/// depth `EXTREMAL_START + i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthSequences {
    pub start_depth: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub extremal: Vec<f64>,
}

impl DepthSequences {
    pub fn lower_at(&self, d: usize) -> f64 {
        self.lower[d - self.start_depth]
    }

    pub fn upper_at(&self, d: usize) -> f64 {
        self.upper[d - self.start_depth]
    }

    pub fn extremal_at(&self, d: usize) -> f64 {
        self.extremal[d - EXTREMAL_START]
    }

    pub fn max_depth(&self) -> usize {
        self.start_depth + self.lower.len() - 1
    }

    pub fn gap_at(&self, d: usize) -> f64 {
        self.upper_at(d) - self.lower_at(d)
    }
}

fn bounding_pair(model: &ModelSpec, d_max: usize) -> (Vec<f64>, Vec<f64>) {
    let top = model.search_upper();
    let mut lower = vec![0.0, 0.0];
    let mut upper = vec![top, top];
    for i in 2..=(d_max - START_DEPTH) {
        let lo = model.update(upper[i - 1], lower[i - 2]);
        let hi = model.update(lower[i - 1], upper[i - 2]);
        lower.push(lo);
        upper.push(hi);
    }
    (lower, upper)
}

/// Bounding sequences `ζ̲_d`, `ζ̄_d` for `5 <= d <= d_max` together with the
/// extremal boundary sequence from depth 3. Requires `d_max >= 7`.
pub fn bounding_sequences(model: &ModelSpec, d_max: usize) -> Result<DepthSequences> {
    if d_max < 7 {
        return Err(MrfError::param(
            "d_max",
            format!("must be >= 7, got {d_max}"),
        ));
    }
    let (lower, upper) = bounding_pair(model, d_max);
    Ok(DepthSequences {
        start_depth: START_DEPTH,
        lower,
        upper,
        extremal: extremal_boundary_seq(model, d_max)?,
    })
}

/// `ζ_d(𝓑)` for `3 <= d <= d_max`: `ζ_3 = λ θ_0^{-1} (θ_Δ/θ_{Δ-1})^{Δ-1}`,
/// `ζ_4 = λ (θ_1/θ_0)^{Δ-1} g(ζ_3)`, then `ζ_d = λ g(ζ_{d-1}) f^{Δ-1}(ζ_{d-2})`.
pub fn extremal_boundary_seq(model: &ModelSpec, d_max: usize) -> Result<Vec<f64>> {
    if d_max < 5 {
        return Err(MrfError::param(
            "d_max",
            format!("must be >= 5, got {d_max}"),
        ));
    }
    let e = (model.delta() - 1) as i32;
    let z3 = model.extremal_seed();
    let z4 = model.lambda * model.theta.bottom_ratio().powi(e) * model.theta.g(z3);
    Ok(two_step(model, z3, z4, d_max - EXTREMAL_START + 1))
}

fn two_step(model: &ModelSpec, a: f64, b: f64, len: usize) -> Vec<f64> {
    let mut seq = vec![a, b];
    while seq.len() < len {
        let n = seq.len();
        seq.push(model.update(seq[n - 1], seq[n - 2]));
    }
    seq.truncate(len);
    seq
}

/// `ζ_d(B)` for `2 <= d <= d_max`, seeded by the exact depth-2 and depth-3
/// ratios and continued with the identical-children recursion.
pub fn boundary_seq(model: &ModelSpec, boundary: Boundary, d_max: usize) -> Result<Vec<f64>> {
    if d_max < 3 {
        return Err(MrfError::param(
            "d_max",
            format!("must be >= 3, got {d_max}"),
        ));
    }
    let z2 = zeta_from_dp(model, 2, boundary)?;
    let z3 = zeta_from_dp(model, 3, boundary)?;
    Ok(two_step(model, z2, z3, d_max - 1))
}

/// Tail reading of a monotone (sub)sequence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Limit {
    pub value: f64,
    pub converged: bool,
    /// Depth at which convergence was declared, or the last depth computed.
    pub depth: usize,
}

struct CauchyTracker {
    last: Option<f64>,
    run: usize,
}

impl CauchyTracker {
    fn new() -> Self {
        Self { last: None, run: 0 }
    }

    // true once CAUCHY_RUN consecutive steps moved by less than CAUCHY_TOL
    fn push(&mut self, v: f64) -> bool {
        if let Some(prev) = self.last {
            if (v - prev).abs() < CAUCHY_TOL {
                self.run += 1;
            } else {
                self.run = 0;
            }
        }
        self.last = Some(v);
        self.run >= CAUCHY_RUN
    }
}

/// Limits of the bounding sequences with early exit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundingLimits {
    pub lower: Limit,
    pub upper: Limit,
}

impl BoundingLimits {
    pub fn gap(&self) -> f64 {
        self.upper.value - self.lower.value
    }

    pub fn converged(&self) -> bool {
        self.lower.converged && self.upper.converged
    }
}

/// Iterates the bounding sequences until both are Cauchy or `d_max`.
pub fn bounding_limits(model: &ModelSpec, d_max: usize) -> Result<BoundingLimits> {
    if d_max < 7 {
        return Err(MrfError::param(
            "d_max",
            format!("must be >= 7, got {d_max}"),
        ));
    }
    let top = model.search_upper();
    let (mut lo2, mut lo1, mut hi2, mut hi1) = (0.0, 0.0, top, top);
    let (mut tl, mut tu) = (CauchyTracker::new(), CauchyTracker::new());
    let mut d = 6;
    let mut done = false;
    while d < d_max && !done {
        d += 1;
        let lo = model.update(hi1, lo2);
        let hi = model.update(lo1, hi2);
        (lo2, lo1, hi2, hi1) = (lo1, lo, hi1, hi);
        let a = tl.push(lo);
        let b = tu.push(hi);
        done = a && b;
    }
    Ok(BoundingLimits {
        lower: Limit {
            value: lo1,
            converged: done,
            depth: d,
        },
        upper: Limit {
            value: hi1,
            converged: done,
            depth: d,
        },
    })
}

/// Even- and odd-depth limits of the extremal boundary sequence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParityGap {
    pub even: Limit,
    pub odd: Limit,
    pub gap: f64,
}

impl ParityGap {
    pub fn converged(&self) -> bool {
        self.even.converged && self.odd.converged
    }
}

/// Requires `d_max >= 100`. Each parity subsequence is monotone, so the limit
/// is read off its tail once it is Cauchy.
pub fn parity_gap(model: &ModelSpec, d_max: usize) -> Result<ParityGap> {
    if d_max < 100 {
        return Err(MrfError::param(
            "d_max",
            format!("must be >= 100, got {d_max}"),
        ));
    }
    let e = (model.delta() - 1) as i32;
    let z3 = model.extremal_seed();
    let z4 = model.lambda * model.theta.bottom_ratio().powi(e) * model.theta.g(z3);
    let (mut prev, mut cur) = (z3, z4);
    let mut trackers = [CauchyTracker::new(), CauchyTracker::new()];
    let mut done = [false, false];
    let mut last = [(0.0, 0usize); 2];
    last[1] = (z3, 3);
    last[0] = (z4, 4);
    trackers[1].push(z3);
    trackers[0].push(z4);
    let mut d = 4;
    while d < d_max && !(done[0] && done[1]) {
        d += 1;
        let next = model.update(cur, prev);
        (prev, cur) = (cur, next);
        let parity = d % 2;
        if !done[parity] {
            done[parity] = trackers[parity].push(next);
            last[parity] = (next, d);
        }
    }
    let limit = |p: usize| Limit {
        value: last[p].0,
        converged: done[p],
        depth: last[p].1,
    };
    let (even, odd) = (limit(0), limit(1));
    Ok(ParityGap {
        even,
        odd,
        gap: (odd.value - even.value).abs(),
    })
}

/// Outcome of checking the bounding-gap contraction below the lower bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    pub holds: bool,
    /// Largest `gap_d / max(gap_{d-1}, gap_{d-2})` among depths whose
    /// denominator exceeds `1e-12`.
    pub worst_ratio: f64,
    /// The contraction factor `λ / λ̲`.
    pub factor: f64,
    /// First depth where the bound failed, if any.
    pub first_violation: Option<usize>,
}

/// Checks `gap_d <= (λ/λ̲) max(gap_{d-1}, gap_{d-2}) + 1e-12` for
/// `7 <= d <= 200`. Requires `λ < λ̲`.
pub fn contraction_check(model: &ModelSpec) -> Result<ContractionReport> {
    let lower = lambda_lower(&model.theta);
    if !(model.lambda < lower) {
        return Err(MrfError::Precondition(format!(
            "contraction needs lambda < {lower}, got {}",
            model.lambda
        )));
    }
    let factor = model.lambda / lower;
    let (lo, hi) = bounding_pair(model, 200);
    let gap = |d: usize| hi[d - START_DEPTH] - lo[d - START_DEPTH];
    let mut worst = 0.0f64;
    let mut first_violation = None;
    for d in 7..=200 {
        let prev = gap(d - 1).max(gap(d - 2));
        if gap(d) > factor * prev + 1e-12 && first_violation.is_none() {
            first_violation = Some(d);
        }
        if prev > 1e-12 {
            worst = worst.max(gap(d) / prev);
        }
    }
    Ok(ContractionReport {
        holds: first_violation.is_none(),
        worst_ratio: worst,
        factor,
        first_violation,
    })
}

/// Root law `(p_0..p_Δ, p_+)` of the depth-`d` tree under `boundary`:
/// `p_k = θ_k C(Δ,k) ζ_d^k / (λ f^Δ(ζ_{d-1}) + L(ζ_d))`. Requires `d >= 5`.
pub fn finite_depth_conditional(
    model: &ModelSpec,
    d: usize,
    boundary: Boundary,
) -> Result<(Vec<f64>, f64)> {
    if d < 5 {
        return Err(MrfError::param("d", format!("must be >= 5, got {d}")));
    }
    let (zd, zd1) = match boundary {
        Boundary::AllIncluded => {
            let s = extremal_boundary_seq(model, d)?;
            (s[d - EXTREMAL_START], s[d - 1 - EXTREMAL_START])
        }
        _ => {
            let s = boundary_seq(model, boundary, d)?;
            (s[d - 2], s[d - 3])
        }
    };
    Ok(occupancy_from_ratios(model, zd, zd1))
}
