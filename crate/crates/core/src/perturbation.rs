//! Expansion around the hardcore model at its critical activity `λ_Δ`:
//! potentials `θ = 1 + c h` for a direction `c` and small `h > 0`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{MrfError, Result};
use crate::fixed_point::{classify_uniqueness, p_func, solve_diagonal, Verdict};
use crate::model::{binomial, is_convex, ModelSpec, ThetaVector};
use crate::numeric::{five_point_derivative, richardson3};
use crate::phase::hardcore_critical;

/// `π·c` within this of zero is not classified.
pub const DOT_DEAD_ZONE: f64 = 1e-12;
/// Steps of the Richardson-extrapolated slope estimates.
pub const SLOPE_STEPS: [f64; 3] = [1e-4, 5e-5, 2.5e-5];

fn check_delta(delta: usize) -> Result<()> {
    if delta < 3 {
        return Err(MrfError::param(
            "delta",
            format!("must be >= 3, got {delta}"),
        ));
    }
    Ok(())
}

fn check_direction(delta: usize, c: &[f64]) -> Result<()> {
    check_delta(delta)?;
    if c.len() != delta + 1 {
        return Err(MrfError::LengthMismatch {
            expected: delta + 1,
            got: c.len(),
        });
    }
    if c.iter().any(|v| !v.is_finite()) {
        return Err(MrfError::param("c", "entries must be finite"));
    }
    Ok(())
}

/// `Λ_{Δ,j} = C(Δ,j) (Δ-2)^{-j}`.
pub fn lambda_capital(delta: usize, j: usize) -> Result<f64> {
    check_delta(delta)?;
    if j > delta {
        return Err(MrfError::OutOfRange {
            value: j as f64,
            lo: 0.0,
            hi: delta as f64,
        });
    }
    Ok(binomial(delta, j) * ((delta - 2) as f64).powi(-(j as i32)))
}

/// `π_j = Λ_{Δ,j} ((Δ-2) + (6-5Δ) j + 2(Δ-1) j²)`.
pub fn pi_vector(delta: usize) -> Result<Vec<f64>> {
    check_delta(delta)?;
    let d = delta as f64;
    (0..=delta)
        .map(|j| {
            let jf = j as f64;
            Ok(lambda_capital(delta, j)?
                * ((d - 2.0) + (6.0 - 5.0 * d) * jf + 2.0 * (d - 1.0) * jf * jf))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DirectionClass {
    Uniqueness,
    NonUniqueness,
    Boundary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationReport {
    pub delta: usize,
    pub c: Vec<f64>,
    /// The classification is only backed by theory for convex `c`.
    pub convex: bool,
    pub pi: Vec<f64>,
    pub dot: f64,
    pub classification: DirectionClass,
}

pub fn classify_direction(delta: usize, c: &[f64]) -> Result<PerturbationReport> {
    check_direction(delta, c)?;
    let pi = pi_vector(delta)?;
    let dot: f64 = pi.iter().zip(c).map(|(a, b)| a * b).sum();
    let classification = if dot < -DOT_DEAD_ZONE {
        DirectionClass::Uniqueness
    } else if dot > DOT_DEAD_ZONE {
        DirectionClass::NonUniqueness
    } else {
        DirectionClass::Boundary
    };
    Ok(PerturbationReport {
        delta,
        c: c.to_vec(),
        convex: is_convex(c),
        pi,
        dot,
        classification,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Identity {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub delta: usize,
    pub identities: Vec<Identity>,
}

impl IdentityReport {
    pub fn all_hold(&self) -> bool {
        self.identities.iter().all(|i| i.holds)
    }
}

/// The closed forms at `λ_Δ`, `θ = 1`: the diagonal solution `1/(Δ-2)` and
/// the sums `Σ Λ`, `Σ iΛ`, `Σ i²Λ`, `Σ π`, `Σ iπ`, each to `tol` relative.
pub fn identity_check(delta: usize, tol: f64) -> Result<IdentityReport> {
    identity_check_with_pi(delta, tol, &pi_vector(delta)?)
}

/// [`identity_check`] against a caller-supplied `π`.
pub fn identity_check_with_pi(delta: usize, tol: f64, pi: &[f64]) -> Result<IdentityReport> {
    check_direction(delta, pi)?;
    let d = delta as f64;
    let big: Vec<f64> = (0..=delta)
        .map(|j| lambda_capital(delta, j))
        .collect::<Result<_>>()?;
    let moment = |v: &[f64], p: i32| -> f64 {
        v.iter()
            .enumerate()
            .map(|(i, x)| (i as f64).powi(p) * x)
            .sum()
    };
    let crit = hardcore_critical(delta);
    let ratio = (d - 1.0) / (d - 2.0);
    let x = solve_diagonal(&ModelSpec::hardcore(delta, crit)?);
    let rows = [
        ("diagonal solution", x, 1.0 / (d - 2.0)),
        ("sum Lambda", moment(&big, 0), ratio.powf(d)),
        ("sum i Lambda", moment(&big, 1), d * crit),
        ("sum i^2 Lambda", moment(&big, 2), 2.0 * d * crit),
        ("sum pi", moment(pi, 0), -ratio.powf(d - 1.0)),
        ("sum i pi", moment(pi, 1), d * ratio.powf(d - 1.0)),
    ];
    let identities = rows
        .into_iter()
        .map(|(name, lhs, rhs)| Identity {
            name: name.to_string(),
            lhs,
            rhs,
            holds: (lhs - rhs).abs() <= tol * rhs.abs(),
        })
        .collect();
    Ok(IdentityReport { delta, identities })
}

/// `z_{l,c} = Σ_{i<Δ} C(Δ-1,i) x*^i c_{i+l}` with `x* = 1/(Δ-2)`.
fn z_term(delta: usize, c: &[f64], l: usize) -> f64 {
    let x = 1.0 / (delta - 2) as f64;
    (0..delta)
        .map(|i| binomial(delta - 1, i) * x.powi(i as i32) * c[i + l])
        .sum()
}

/// First-order shift of the diagonal solution at `λ_Δ` along `c`:
/// `½ (Δ-2)^{Δ-2} (Δ-1)^{-(Δ-1)} ((Δ-1) z_1 - Δ z_0)`.
pub fn x_c_formula(delta: usize, c: &[f64]) -> Result<f64> {
    check_direction(delta, c)?;
    let d = delta as f64;
    let pre = 0.5 * ((d - 2.0) * (d - 2.0).ln() - (d - 1.0) * (d - 1.0).ln()).exp();
    Ok(pre * ((d - 1.0) * z_term(delta, c, 1) - d * z_term(delta, c, 0)))
}

fn perturbed_model(delta: usize, c: &[f64], h: f64) -> Result<ModelSpec> {
    ModelSpec::new(ThetaVector::perturbed_ones(c, h)?, hardcore_critical(delta))
}

/// Richardson extrapolation of the forward quotients `(F(h) - F(0))/h`.
fn extrapolated_slope<F: FnMut(f64) -> Result<f64>>(mut f: F) -> Result<f64> {
    let base = f(0.0)?;
    let q = |h: f64, v: f64| (v - base) / h;
    let [a, b, c] = SLOPE_STEPS;
    Ok(richardson3(q(a, f(a)?), q(b, f(b)?), q(c, f(c)?)))
}

pub fn x_c_numeric(delta: usize, c: &[f64]) -> Result<f64> {
    check_direction(delta, c)?;
    extrapolated_slope(|h| Ok(solve_diagonal(&perturbed_model(delta, c, h)?)))
}

/// `-½ ((Δ-2)/(Δ-1))^Δ (π·c)`: first-order coefficient of
/// `p'(x*) + λ_Δ g'(x*)` along `c`.
pub fn gap_slope_formula(delta: usize, c: &[f64]) -> Result<f64> {
    let dot = classify_direction(delta, c)?.dot;
    let d = delta as f64;
    Ok(-0.5 * ((d - 2.0) / (d - 1.0)).powf(d) * dot)
}

/// `p'(x*) + λ_Δ g'(x*)` for `θ = 1 + c h`, derivatives by five-point
/// central differences. Vanishes at `h = 0`.
pub fn criterion_gap(delta: usize, c: &[f64], h: f64) -> Result<f64> {
    let model = perturbed_model(delta, c, h)?;
    let x = solve_diagonal(&model);
    let step = 1e-3 * x.max(1.0);
    let theta = &model.theta;
    let dp = five_point_derivative(|t| p_func(theta, t), x, step);
    let dg = five_point_derivative(|t| theta.g(t), x, step);
    Ok(dp + model.lambda * dg)
}

pub fn gap_slope_numeric(delta: usize, c: &[f64]) -> Result<f64> {
    check_direction(delta, c)?;
    extrapolated_slope(|h| criterion_gap(delta, c, h))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeReport {
    pub x_c_formula: f64,
    pub x_c_numeric: f64,
    pub gap_slope_formula: f64,
    pub gap_slope_numeric: f64,
}

impl SlopeReport {
    pub fn x_c_rel_error(&self) -> f64 {
        rel_error(self.x_c_numeric, self.x_c_formula)
    }

    pub fn gap_rel_error(&self) -> f64 {
        rel_error(self.gap_slope_numeric, self.gap_slope_formula)
    }
}

fn rel_error(numeric: f64, formula: f64) -> f64 {
    if formula == 0.0 {
        numeric.abs()
    } else {
        ((numeric - formula) / formula).abs()
    }
}

pub fn slope_report(delta: usize, c: &[f64]) -> Result<SlopeReport> {
    Ok(SlopeReport {
        x_c_formula: x_c_formula(delta, c)?,
        x_c_numeric: x_c_numeric(delta, c)?,
        gap_slope_formula: gap_slope_formula(delta, c)?,
        gap_slope_numeric: gap_slope_numeric(delta, c)?,
    })
}

/// Verdicts at `(λ_Δ, θ = 1 + e_0 h)` for each `h`.
pub fn nonmonotonicity_scan(delta: usize, hs: &[f64]) -> Result<Vec<(f64, Verdict)>> {
    check_delta(delta)?;
    let mut e0 = vec![0.0; delta + 1];
    e0[0] = 1.0;
    hs.iter()
        .map(|&h| {
            if !(h >= 0.0) || !h.is_finite() {
                return Err(MrfError::param(
                    "h",
                    format!("must be finite and >= 0, got {h}"),
                ));
            }
            Ok((
                h,
                classify_uniqueness(&perturbed_model(delta, &e0, h)?).verdict,
            ))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct E0Pattern {
    pub small: Vec<(f64, Verdict)>,
    pub doubling: Vec<(f64, Verdict)>,
    pub nonunique_at: Option<f64>,
    pub unique_at: Option<f64>,
}

impl E0Pattern {
    pub fn exhibits_reentry(&self) -> bool {
        self.nonunique_at.is_some() && self.unique_at.is_some()
    }
}

/// Small steps `h ∈ (0, 0.5]`, then doubling from 1 up to `h_max` until
/// a Unique verdict appears.
pub fn e0_pattern(delta: usize, h_max: f64) -> Result<E0Pattern> {
    let small = nonmonotonicity_scan(delta, &[0.01, 0.02, 0.05, 0.1, 0.2, 0.5])?;
    let nonunique_at = small
        .iter()
        .find(|(_, v)| *v == Verdict::NonUnique)
        .map(|p| p.0);
    let mut doubling = Vec::new();
    let mut unique_at = None;
    let mut h = 1.0;
    while h <= h_max {
        let row = nonmonotonicity_scan(delta, &[h])?[0];
        doubling.push(row);
        if row.1 == Verdict::Unique {
            unique_at = Some(h);
            break;
        }
        h *= 2.0;
    }
    Ok(E0Pattern {
        small,
        doubling,
        nonunique_at,
        unique_at,
    })
}

/// Random convex direction of length `Δ+1`: second differences drawn from
/// `[0.2, 1]`, random slope and offset, rescaled into `[-1, 1]`.
pub fn random_convex_direction<R: Rng + ?Sized>(delta: usize, rng: &mut R) -> Vec<f64> {
    let mut c = vec![0.0; delta + 1];
    let mut slope = rng.gen_range(-(delta as f64)..0.0);
    for k in 1..=delta {
        c[k] = c[k - 1] + slope;
        slope += rng.gen_range(0.2..=1.0);
    }
    let shift = rng.gen_range(-1.0..1.0) * c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for v in &mut c {
        *v += shift;
    }
    let scale = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let target = rng.gen_range(0.5..=1.0);
    if scale > 0.0 {
        for v in &mut c {
            *v *= target / scale;
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pi_for_three() {
        assert_eq!(pi_vector(3).unwrap(), vec![1.0, -12.0, -3.0, 10.0]);
        assert_eq!(lambda_capital(3, 2).unwrap(), 3.0);
        assert_eq!(lambda_capital(7, 0).unwrap(), 1.0);
        assert!(lambda_capital(3, 4).is_err());
        assert!(pi_vector(2).is_err());
    }

    #[test]
    fn identities_hold() {
        for d in 3..=12 {
            let r = identity_check(d, 1e-10).unwrap();
            assert!(r.all_hold(), "{r:?}");
        }
        let r = identity_check(3, 1e-10).unwrap();
        assert_eq!(r.identities[3].rhs, 24.0);
    }

    #[test]
    fn directions() {
        let r = classify_direction(3, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(
            (r.dot, r.classification),
            (1.0, DirectionClass::NonUniqueness)
        );
        let r = classify_direction(3, &[0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(
            (r.dot, r.classification, r.convex),
            (10.0, DirectionClass::NonUniqueness, true)
        );
        let r = classify_direction(3, &[0.0; 4]).unwrap();
        assert_eq!(r.classification, DirectionClass::Boundary);
        assert!(classify_direction(3, &[0.0; 3]).is_err());
    }

    #[test]
    fn x_c_closed_values() {
        assert!((x_c_formula(3, &[1.0, 0.0, 0.0, 0.0]).unwrap() + 0.375).abs() < 1e-15);
        assert_eq!(x_c_formula(4, &[0.0; 5]).unwrap(), 0.0);
        // a uniform shift rescales θ, which moves x* like a change of λ
        for d in 3..=6 {
            let f = x_c_formula(d, &vec![1.0; d + 1]).unwrap();
            assert!((f + 0.5 / (d - 2) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn gap_formula_value() {
        assert!((gap_slope_formula(3, &[0.0, 0.0, 0.0, 1.0]).unwrap() + 0.625).abs() < 1e-15);
        assert!(criterion_gap(3, &[0.0; 4], 0.0).unwrap().abs() < 1e-9);
    }

    #[test]
    fn slopes_match_finite_differences() {
        for (d, c) in [
            (3, vec![1.0, 0.0, 0.0, 0.0]),
            (3, vec![0.0, 0.0, 0.0, 1.0]),
            (4, vec![1.0; 5]),
        ] {
            let r = slope_report(d, &c).unwrap();
            assert!(r.x_c_rel_error() < 1e-4, "{r:?}");
            assert!(r.gap_rel_error() < 1e-3, "{r:?}");
        }
    }

    #[test]
    fn random_directions_are_convex_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for d in 3..=6 {
            for _ in 0..50 {
                let c = random_convex_direction(d, &mut rng);
                assert!(is_convex(&c));
                assert!(c.iter().all(|v| v.abs() <= 1.0 + 1e-15));
            }
        }
    }

    #[test]
    fn e0_reentry_for_three() {
        assert_eq!(
            nonmonotonicity_scan(3, &[0.0]).unwrap()[0].1,
            Verdict::Unique
        );
        let p = e0_pattern(3, 1e3).unwrap();
        assert!(p.exhibits_reentry(), "{p:?}");
    }
}
