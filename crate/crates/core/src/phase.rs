//! Explicit bounds on the critical activity and a numerical bracket of the
//! observed transition between them.

use serde::{Deserialize, Serialize};

use crate::error::{MrfError, Result};
use crate::fixed_point::{classify_uniqueness, solve_diagonal, Verdict};
use crate::model::{ModelSpec, ThetaVector, PREDICATE_SLACK};
use crate::numeric::geometric_grid;

/// Points of the geometric scan grid in [`critical_bracket`].
pub const BRACKET_GRID: usize = 64;

/// `ψ = max_{k=0..Δ-2} (Δ-(k+1)) θ_{k+1}/θ_k`.
pub fn psi(theta: &ThetaVector) -> f64 {
    let d = theta.delta();
    (0..=d - 2)
        .map(|k| (d - (k + 1)) as f64 * theta.theta(k + 1) / theta.theta(k))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `λ̲ = (2ψ θ_0^{-1} R^{Δ-2} (R + (Δ-1)(R - θ_1/θ_0)))^{-1}` with
/// `R = θ_Δ/θ_{Δ-1}`.
pub fn lambda_lower(theta: &ThetaVector) -> f64 {
    let d = theta.delta() as f64;
    let r = theta.top_ratio();
    let spread = r + (d - 1.0) * (r - theta.bottom_ratio());
    1.0 / (2.0 * psi(theta) / theta.theta(0) * r.powf(d - 2.0) * spread)
}

/// `λ̄ = (3θ_0/Δ)(θ_0/θ_1)^Δ exp(3 R θ_0/θ_1)`.
pub fn lambda_upper(theta: &ThetaVector) -> f64 {
    let d = theta.delta() as f64;
    let inv = 1.0 / theta.bottom_ratio();
    3.0 * theta.theta(0) / d * inv.powf(d) * (3.0 * theta.top_ratio() * inv).exp()
}

/// Critical activity of the hardcore model, `(Δ-1)^{Δ-1} / (Δ-2)^Δ`.
pub fn hardcore_critical(delta: usize) -> f64 {
    let d = delta as f64;
    ((d - 1.0) * (d - 1.0).ln() - d * (d - 2.0).ln()).exp()
}

/// Direction of a verdict change between two adjacent activities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Crossing {
    UniqueToNonUnique,
    NonUniqueToUnique,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignChange {
    pub lo: f64,
    pub hi: f64,
    pub direction: Crossing,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseBracket {
    pub lambda_lower_bound: f64,
    pub lambda_upper_bound: f64,
    /// Ends of the largest-λ Unique→NonUnique change, if one was seen.
    pub last_unique: Option<f64>,
    pub first_nonunique: Option<f64>,
    pub sign_changes: Vec<SignChange>,
    /// Some activity, on the grid or during refinement, was Undetermined.
    pub partial: bool,
    pub grid: Vec<(f64, Verdict)>,
}

fn verdict_at(theta: &ThetaVector, lambda: f64) -> Result<Verdict> {
    Ok(classify_uniqueness(&ModelSpec::new(theta.clone(), lambda)?).verdict)
}

/// Scans a geometric grid over `[λ̲, λ̄]` and refines every verdict change
/// by bisection to width `tol`. Monotonicity in `λ` is not assumed.
pub fn critical_bracket(theta: &ThetaVector, tol: f64) -> Result<PhaseBracket> {
    if !theta.is_log_convex() {
        return Err(MrfError::Precondition("theta must be log-convex".into()));
    }
    if !(tol > 0.0) {
        return Err(MrfError::param("tol", format!("must be > 0, got {tol}")));
    }
    let (lo, hi) = (lambda_lower(theta), lambda_upper(theta));
    let grid = geometric_grid(lo, hi, BRACKET_GRID)
        .into_iter()
        .map(|l| Ok((l, verdict_at(theta, l)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut partial = grid.iter().any(|(_, v)| *v == Verdict::Undetermined);
    let mut sign_changes = Vec::new();
    for w in grid.windows(2) {
        let ((a, va), (b, vb)) = (w[0], w[1]);
        let direction = match (va, vb) {
            (Verdict::Unique, Verdict::NonUnique) => Crossing::UniqueToNonUnique,
            (Verdict::NonUnique, Verdict::Unique) => Crossing::NonUniqueToUnique,
            _ => continue,
        };
        let (mut l, mut r) = (a, b);
        while r - l > tol {
            let mid = 0.5 * (l + r);
            if mid <= l || mid >= r {
                break;
            }
            match verdict_at(theta, mid)? {
                Verdict::Undetermined => {
                    partial = true;
                    break;
                }
                v if v == va => l = mid,
                _ => r = mid,
            }
        }
        sign_changes.push(SignChange {
            lo: l,
            hi: r,
            direction,
        });
    }
    let outer = sign_changes
        .iter()
        .rev()
        .find(|s| s.direction == Crossing::UniqueToNonUnique);
    Ok(PhaseBracket {
        lambda_lower_bound: lo,
        lambda_upper_bound: hi,
        last_unique: outer.map(|s| s.lo),
        first_nonunique: outer.map(|s| s.hi),
        sign_changes,
        partial,
        grid,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub lambda_lower: f64,
    pub lower_floor: f64,
    pub lambda_upper: f64,
    pub upper_ceiling: f64,
    pub holds: bool,
}

/// For `max(R, θ_0/θ_1) <= 1 + c/Δ`, checks `λ̲ >= θ_0/(2Δ e^c (1+5c))` and
/// `λ̄ <= 3 e^{12+c} θ_0/Δ`.
pub fn robustness_check(theta: &ThetaVector, c: f64) -> Result<RobustnessReport> {
    let d = theta.delta() as f64;
    if !(0.0..=d).contains(&c) {
        return Err(MrfError::Precondition(format!(
            "c must lie in [0, {d}], got {c}"
        )));
    }
    let worst = theta.top_ratio().max(1.0 / theta.bottom_ratio());
    if worst > (1.0 + c / d) * (1.0 + PREDICATE_SLACK) {
        return Err(MrfError::Precondition(format!(
            "max ratio {worst} exceeds 1 + c/Δ = {}",
            1.0 + c / d
        )));
    }
    let t0 = theta.theta(0);
    let lower_floor = t0 / (2.0 * c.exp() * (1.0 + 5.0 * c) * d);
    let upper_ceiling = 3.0 * (12.0 + c).exp() * t0 / d;
    let (ll, lu) = (lambda_lower(theta), lambda_upper(theta));
    Ok(RobustnessReport {
        lambda_lower: ll,
        lower_floor,
        lambda_upper: lu,
        upper_ceiling,
        holds: ll >= lower_floor * (1.0 - PREDICATE_SLACK)
            && lu <= upper_ceiling * (1.0 + PREDICATE_SLACK),
    })
}

/// At `λ = λ̄` the diagonal solution satisfies `x* >= (3/Δ)(θ_0/θ_1)`.
pub fn verify1_check(theta: &ThetaVector) -> Result<bool> {
    if !theta.is_log_convex() {
        return Err(MrfError::Precondition("theta must be log-convex".into()));
    }
    let model = ModelSpec::new(theta.clone(), lambda_upper(theta))?;
    let x = solve_diagonal(&model);
    Ok(x >= 3.0 / theta.delta() as f64 / theta.bottom_ratio() - 1e-9)
}
