//! Potential vectors, the rational maps `f`, `g`, `L`, and structural
//! predicates on sequences and neighbour laws.

mod distribution;
mod poly;
mod theta;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use distribution::{
    induced_mu, is_reverse_ultra_log_concave, theta_for_family, theta_for_family_name, Family,
    NeighborDistribution,
};
pub use poly::{log_derivative, log_eval, log_eval_lse, sym_polys};
pub use theta::{
    binomial, binomial_exact, is_convex, is_log_convex_slice, ThetaVector, PREDICATE_SLACK,
};

use crate::error::{MrfError, Result};

/// One point `(Δ, λ, θ)` of parameter space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub theta: ThetaVector,
    pub lambda: f64,
}

impl ModelSpec {
    pub fn new(theta: ThetaVector, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(MrfError::param(
                "lambda",
                format!("must be finite and > 0, got {lambda}"),
            ));
        }
        Ok(Self { theta, lambda })
    }

    /// Hardcore model (all-ones potentials) at degree `delta`.
    pub fn hardcore(delta: usize, lambda: f64) -> Result<Self> {
        Self::new(ThetaVector::ones(delta)?, lambda)
    }

    pub fn delta(&self) -> usize {
        self.theta.delta()
    }

    /// `λ r_max^{Δ-1} / θ_0` with `r_max` the largest consecutive ratio. It
    /// bounds the update map (`g <= 1/θ_0`, `f <= r_max`), so every
    /// nonnegative solution of the system lies below it. For log-convex `θ`
    /// it equals [`ModelSpec::extremal_seed`].
    pub fn search_upper(&self) -> f64 {
        let e = (self.delta() - 1) as i32;
        self.lambda * self.theta.ratio_range().1.powi(e) / self.theta.theta(0)
    }

    /// `λ (θ_Δ/θ_{Δ-1})^{Δ-1} / θ_0`: the ratio at depth 3 under the
    /// all-included boundary.
    pub fn extremal_seed(&self) -> f64 {
        let e = (self.delta() - 1) as i32;
        self.lambda * self.theta.top_ratio().powi(e) / self.theta.theta(0)
    }

    /// `λ g(y) f(x)^{Δ-1}`.
    pub fn update(&self, y: f64, x: f64) -> f64 {
        self.theta.update(self.lambda, y, x)
    }

    /// Same model at another activity.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.theta.clone(), lambda)
    }
}

fn check_nonneg(name: &'static str, x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(MrfError::param(
            name,
            format!("must be finite and >= 0, got {x}"),
        ))
    }
}

/// `f_θ(x) = Σ θ_{k+1} C(Δ-1,k) x^k / Σ θ_k C(Δ-1,k) x^k`.
pub fn f_scalar(theta: &ThetaVector, x: f64) -> Result<f64> {
    check_nonneg("x", x)?;
    Ok(theta.f(x))
}

/// `g_θ(x) = (Σ θ_k C(Δ-1,k) x^k)^{-1}`.
pub fn g_scalar(theta: &ThetaVector, x: f64) -> Result<f64> {
    check_nonneg("x", x)?;
    Ok(theta.g(x))
}

/// `L_θ(z) = Σ θ_i C(Δ,i) z^i`.
pub fn big_l(theta: &ThetaVector, z: f64) -> Result<f64> {
    check_nonneg("z", z)?;
    Ok(theta.big_l(z))
}

pub fn f_multi(theta: &ThetaVector, x: &[f64]) -> Result<f64> {
    theta.f_multi(x)
}

pub fn g_multi(theta: &ThetaVector, x: &[f64]) -> Result<f64> {
    theta.g_multi(x)
}

pub fn is_log_convex(theta: &ThetaVector) -> bool {
    theta.is_log_convex()
}

/// Random log-convex `θ`: `θ_0` log-uniform on `[1/2, 2]` and consecutive
/// ratios log-uniform, sorted ascending, with `max ratio / min ratio <= spread`.
pub fn random_log_convex_theta<R: Rng + ?Sized>(
    delta: usize,
    spread: f64,
    rng: &mut R,
) -> Result<ThetaVector> {
    if !(spread >= 1.0) {
        return Err(MrfError::param(
            "spread",
            format!("must be >= 1, got {spread}"),
        ));
    }
    let centre = rng.gen_range(-1.0..1.0);
    let half = 0.5 * spread.ln();
    let mut logs: Vec<f64> = (0..delta)
        .map(|_| centre + rng.gen_range(-half..=half))
        .collect();
    logs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ThetaVector::with_delta(delta, accumulate(rng.gen_range(-0.7..0.7), &logs))
}

/// Random positive `θ` with consecutive ratios log-uniform on
/// `[1/spread, spread]` in random order.
pub fn random_theta<R: Rng + ?Sized>(
    delta: usize,
    spread: f64,
    rng: &mut R,
) -> Result<ThetaVector> {
    if !(spread >= 1.0) {
        return Err(MrfError::param(
            "spread",
            format!("must be >= 1, got {spread}"),
        ));
    }
    let l = spread.ln();
    let logs: Vec<f64> = (0..delta).map(|_| rng.gen_range(-l..=l)).collect();
    ThetaVector::with_delta(delta, accumulate(rng.gen_range(-0.7..0.7), &logs))
}

fn accumulate(log_start: f64, log_ratios: &[f64]) -> Vec<f64> {
    let mut out = vec![log_start.exp()];
    let mut acc = log_start;
    for r in log_ratios {
        acc += r;
        out.push(acc.exp());
    }
    out
}
