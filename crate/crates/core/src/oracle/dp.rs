//! Bottom-up partition functions of the single-branch tree `T'_d` under
//! boundary conditions that are identical across each layer.
//!
//! Every node below `v_1` sees `Δ - 1` identical child subtrees, so the sum
//! over child patterns `x ∈ {0,1}^{Δ-1}` collapses to a binomial sum over
//! `|x|`.

use num_traits::{FromPrimitive, ToPrimitive};

use super::enumerate::{root_masses, RootMasses};
use super::{Boundary, Potentials, RootedTree, Weight};
use crate::error::{MrfError, Result};
use crate::model::{binomial, binomial_exact, ModelSpec};
use crate::numeric::log_sum_exp;

/// `Z_d(0,0)`, `Z_d(0,1)`, `Z_d(1,0)` of `T'_d` (`Z_d(1,1) = 0`). The first
/// index is the state of `v_0`, the second that of `v_1`.
#[derive(Clone, Debug, PartialEq)]
pub struct DpValues<T> {
    pub z00: T,
    pub z01: T,
    pub z10: T,
}

fn leaf_values<T: Weight>(boundary: Boundary) -> DpValues<T> {
    let (o, z) = (T::one(), T::zero());
    match boundary {
        Boundary::AllIncluded => DpValues {
            z00: z.clone(),
            z01: o,
            z10: z,
        },
        Boundary::AllExcluded => DpValues {
            z00: o.clone(),
            z01: z,
            z10: o,
        },
        Boundary::Free => DpValues {
            z00: o.clone(),
            z01: o.clone(),
            z10: o,
        },
    }
}

fn step_exact<T: Weight + FromPrimitive>(pot: &Potentials<T>, c: &DpValues<T>) -> DpValues<T> {
    let kids = pot.delta() - 1;
    let mut z00 = T::zero();
    let mut z10 = T::zero();
    for k in 0..=kids {
        let b = T::from_u128(binomial_exact(kids, k)).expect("binomial fits");
        let pattern = b * pow(&c.z01, k) * pow(&c.z00, kids - k);
        z00 = z00 + pot.theta[k].clone() * pattern.clone();
        z10 = z10 + pot.theta[k + 1].clone() * pattern;
    }
    DpValues {
        z00,
        z01: pot.lambda.clone() * pow(&c.z10, kids),
        z10,
    }
}

fn pow<T: Weight>(x: &T, e: usize) -> T {
    (0..e).fold(T::one(), |acc, _| acc * x.clone())
}

fn check_depth(d: usize) -> Result<()> {
    if d < 2 {
        return Err(MrfError::param("d", format!("depth must be >= 2, got {d}")));
    }
    Ok(())
}

/// Exact `Z_d(·,·,B)` in any field (rationals for bit-exact checks).
///
/// Depth `d >= 2`: `v_1` sits at depth 1, the pinned layers at `d - 1`, `d`.
pub fn dp_exact<T: Weight + FromPrimitive>(
    pot: &Potentials<T>,
    d: usize,
    boundary: Boundary,
) -> Result<DpValues<T>> {
    check_depth(d)?;
    let mut cur = leaf_values::<T>(boundary);
    for height in 1..d {
        cur = step_exact(pot, &cur);
        if height == 1 && boundary != Boundary::Free {
            // second-to-last layer is pinned excluded under both fixed boundaries
            cur.z01 = T::zero();
        }
    }
    Ok(cur)
}

/// Floating-point DP normalized by `Z_d(0,0)` at every layer, so deep trees
/// keep full relative precision in the ratios.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledDp {
    /// `ln Z_d(0,0)`.
    pub log_z00: f64,
    /// `Z_d(0,1) / Z_d(0,0)`, which is `ζ_d(B)`.
    pub r01: f64,
    /// `Z_d(1,0) / Z_d(0,0)`.
    pub r10: f64,
}

pub fn dp_scaled(model: &ModelSpec, d: usize, boundary: Boundary) -> Result<ScaledDp> {
    check_depth(d)?;
    let pot = Potentials::from_model(model);
    // the two pinned layers hold zeros, so run them linearly; Z(0,0) > 0 from here on
    let mut first = step_exact(&pot, &leaf_values::<f64>(boundary));
    if boundary != Boundary::Free {
        first.z01 = 0.0;
    }
    let mut out = ScaledDp {
        log_z00: first.z00.ln(),
        r01: first.z01 / first.z00,
        r10: first.z10 / first.z00,
    };
    let theta = &model.theta;
    let kids = (model.delta() - 1) as f64;
    for _ in 2..d {
        // Z'(i,0) = Z(0,0)^{Δ-1} Σ_k θ_{k+i} C(Δ-1,k) r01^k, Z'(0,1) = λ Z(1,0)^{Δ-1}
        let log_s0 = -theta.log_g(out.r01);
        out = ScaledDp {
            log_z00: kids * out.log_z00 + log_s0,
            r01: (model.lambda.ln() + kids * out.r10.ln() - log_s0).exp(),
            r10: theta.f(out.r01),
        };
    }
    Ok(out)
}

/// `ln Z_d(·,·,B)` in floating point; `-inf` marks an empty sum.
pub fn dp_partition(model: &ModelSpec, d: usize, boundary: Boundary) -> Result<DpValues<f64>> {
    let s = dp_scaled(model, d, boundary)?;
    Ok(DpValues {
        z00: s.log_z00,
        z01: s.log_z00 + s.r01.ln(),
        z10: s.log_z00 + s.r10.ln(),
    })
}

/// `ζ_d(B) = Z_d(0,1,B) / Z_d(0,0,B)` from the floating-point DP.
pub fn zeta_from_dp(model: &ModelSpec, d: usize, boundary: Boundary) -> Result<f64> {
    Ok(dp_scaled(model, d, boundary)?.r01)
}

/// Root law of the full depth-`d` tree `T_d` from the subtree DP values:
/// `p_k ∝ θ_k C(Δ,k) Z(0,1)^k Z(0,0)^{Δ-k}`, `p_+ ∝ λ Z(1,0)^Δ`.
pub fn conditional_pk_exact<T: Weight + FromPrimitive>(
    pot: &Potentials<T>,
    d: usize,
    boundary: Boundary,
) -> Result<RootMasses<T>> {
    let v = dp_exact(pot, d, boundary)?;
    let delta = pot.delta();
    let masses = (0..=delta)
        .map(|k| {
            let b = T::from_u128(binomial_exact(delta, k)).expect("binomial fits");
            pot.theta[k].clone() * b * pow(&v.z01, k) * pow(&v.z00, delta - k)
        })
        .collect();
    Ok(RootMasses {
        masses,
        plus: pot.lambda.clone() * pow(&v.z10, delta),
    })
}

/// Floating-point root law `(p_0..p_Δ, p_+)` of `T_d`, computed in log space
/// from the normalized DP ratios.
pub fn conditional_pk(model: &ModelSpec, d: usize, boundary: Boundary) -> Result<(Vec<f64>, f64)> {
    let s = dp_scaled(model, d, boundary)?;
    let delta = model.delta();
    let mut logs: Vec<f64> = (0..=delta)
        .map(|k| model.theta.theta(k).ln() + binomial(delta, k).ln() + times(k, s.r01.ln()))
        .collect();
    logs.push(model.lambda.ln() + delta as f64 * s.r10.ln());
    let z = log_sum_exp(&logs);
    let mut p: Vec<f64> = logs.iter().map(|l| (l - z).exp()).collect();
    let plus = p.pop().expect("nonempty");
    Ok((p, plus))
}

// k * ln(x) with the convention 0 * ln(0) = 0
fn times(k: usize, lx: f64) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * lx
    }
}

/// Pins for the bottom two layers of a rooted tree under `boundary`.
pub fn boundary_pins(tree: &RootedTree, boundary: Boundary) -> Vec<Option<bool>> {
    let h = tree.height;
    tree.depth
        .iter()
        .map(|&dep| match boundary {
            Boundary::Free => None,
            _ if h >= 1 && dep == h - 1 => Some(false),
            Boundary::AllIncluded if dep == h => Some(true),
            Boundary::AllExcluded if dep == h => Some(false),
            _ => None,
        })
        .collect()
}

/// `Z_d(i,j,B)` of `T'_d` by brute-force enumeration, for cross-checks.
pub fn dp_by_enumeration<T: Weight>(
    pot: &Potentials<T>,
    d: usize,
    boundary: Boundary,
) -> Result<DpValues<T>> {
    let tree = RootedTree::single_branch(pot.delta(), d);
    let pins = boundary_pins(&tree, boundary);
    let mut vals = [T::zero(), T::zero(), T::zero(), T::zero()];
    super::enumerate::for_each_independent_set(&tree.graph, pot, &pins, |occ, w| {
        let idx = 2 * occ[0] as usize + occ[1] as usize;
        vals[idx] = vals[idx].clone() + w.clone();
    })?;
    let [z00, z01, z10, _] = vals;
    Ok(DpValues { z00, z01, z10 })
}

/// Root law of `T_d` by brute-force enumeration.
pub fn conditional_pk_by_enumeration<T: Weight>(
    pot: &Potentials<T>,
    d: usize,
    boundary: Boundary,
) -> Result<RootMasses<T>> {
    let tree = RootedTree::regular(pot.delta(), d);
    let pins = boundary_pins(&tree, boundary);
    root_masses(&tree.graph, pot, &pins, 0)
}

/// Float helper: normalized root law from exact masses.
pub fn masses_to_f64<T: Weight + ToPrimitive>(m: &RootMasses<T>) -> (Vec<f64>, f64) {
    let (p, plus) = m.probabilities();
    (
        p.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect(),
        plus.to_f64().unwrap_or(f64::NAN),
    )
}
