//! The two-equation system `x = λ g(y) f^{Δ-1}(x)`, `y = λ g(x) f^{Δ-1}(y)`.
//!
//! Writing `p(x) = x f^{-(Δ-1)}(x)`, the system reads `p(x) = λ g(y)`,
//! `p(y) = λ g(x)`. When `p` is increasing it becomes `y = q(x)`, `x = q(y)`
//! with `q = p^{-1} ∘ λg` decreasing, so solutions are the fixed points of
//! `q` (one, on the diagonal) and its two-cycles.

use serde::{Deserialize, Serialize};

use crate::error::{MrfError, Result};
use crate::model::{binomial, ModelSpec, ThetaVector};
use crate::numeric::{bisect, central_difference, derivatives_123, log_sum_exp, mixed_grid};
use crate::recursion::{bounding_limits, DEFAULT_MAX_DEPTH};

/// Solutions closer than this are treated as one.
pub const SOLUTION_TIE: f64 = 1e-9;
/// Grid size for the monotonicity check of `p` and the diagonal sign scan.
pub const SCAN_POINTS: usize = 2048;
/// Grid size for the off-diagonal scan used when `p` is not increasing.
pub const FALLBACK_POINTS: usize = 4096;
/// Iterations of `q` before switching to the root scan of `q∘q - id`.
pub const MAX_Q_ITERATIONS: usize = 20_000;
const Q_CAUCHY_RUN: usize = 20;
const Q_CAUCHY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Unique,
    NonUnique,
    Undetermined,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Unique => "Unique",
            Verdict::NonUnique => "NonUnique",
            Verdict::Undetermined => "Undetermined",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which route produced a verdict.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolvePath {
    /// Two-cycles of the decreasing map `q`.
    QMap,
    /// Off-diagonal scan of the system, then the bounding sequences.
    Fallback,
    /// No classification attempted.
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointReport {
    pub verdict: Verdict,
    pub diagonal_x: f64,
    /// Off-diagonal solution `(x, y)` with `x < y`.
    pub two_cycle: Option<(f64, f64)>,
    pub iterations: usize,
    /// Residuals of the two equations at the reported solution.
    pub residuals: (f64, f64),
    pub search_interval: (f64, f64),
    pub path: SolvePath,
    pub p_increasing: bool,
    pub multiple_diagonal_roots: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

/// `p(x) = x f^{-(Δ-1)}(x)`.
pub fn p_func(theta: &ThetaVector, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let e = (theta.delta() - 1) as f64;
    x * (-e * theta.log_f(x)).exp()
}

/// `p'(x) = f^{-(Δ-1)}(x) (1 - (Δ-1) x f'(x)/f(x))`.
pub fn p_derivative(theta: &ThetaVector, x: f64) -> f64 {
    let e = (theta.delta() - 1) as f64;
    (-e * theta.log_f(x)).exp() * (1.0 - e * x * theta.dlog_f(x))
}

/// True iff the central-difference slope of `p` exceeds `1e-10` at every
/// point of a 2048-point uniform grid over the search interval, refined by
/// 256 geometric points near 0 where the dips of `p` sit when `U` is large.
pub fn p_is_increasing(theta: &ThetaVector, lambda: f64) -> bool {
    let e = (theta.delta() - 1) as i32;
    let top = lambda * theta.top_ratio().powi(e) / theta.theta(0);
    mixed_grid(0.0, top, SCAN_POINTS, 256).into_iter().all(|x| {
        let h = 1e-6 * x.max(1.0);
        let slope = if x < h {
            (p_func(theta, x + h) - p_func(theta, x)) / h
        } else {
            central_difference(|t| p_func(theta, t), x, h)
        };
        slope > 1e-10
    })
}

/// The `x` with `p(x) = y`, by safeguarded Newton on the bracket
/// `[y r_min^{Δ-1}, y r_max^{Δ-1}]` (`f` lies between the extreme ratios).
pub fn p_inverse(theta: &ThetaVector, y: f64) -> Result<f64> {
    if !(y >= 0.0) || !y.is_finite() {
        return Err(MrfError::OutOfRange {
            value: y,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    let e = (theta.delta() - 1) as i32;
    let (rmin, rmax) = theta.ratio_range();
    let (mut a, mut b) = (y * rmin.powi(e), y * rmax.powi(e));
    if b - a <= 4.0 * f64::EPSILON * b {
        return Ok(a);
    }
    let mut x = 0.5 * (a + b);
    let mut best = (f64::INFINITY, x);
    for _ in 0..crate::numeric::MAX_BISECTION_STEPS {
        let r = p_func(theta, x) - y;
        if r.abs() < best.0 {
            best = (r.abs(), x);
        }
        if r == 0.0 {
            return Ok(x);
        }
        if r < 0.0 {
            a = x;
        } else {
            b = x;
        }
        let slope = p_derivative(theta, x);
        let mut next = x - r / slope;
        if !(next > a && next < b) {
            next = 0.5 * (a + b);
        }
        if (next - x).abs() <= 2.0 * f64::EPSILON * x || b - a <= 2.0 * f64::EPSILON * b {
            break;
        }
        x = next;
    }
    Ok(best.1)
}

/// `q(x) = p^{-1}(λ g(x))`.
pub fn q_func(model: &ModelSpec, x: f64) -> Result<f64> {
    p_inverse(&model.theta, model.lambda * model.theta.g(x))
}

/// `η(x) = x - λ g(x) f^{Δ-1}(x)`; its roots are the diagonal solutions.
pub fn eta(model: &ModelSpec, x: f64) -> f64 {
    x - model.update(x, x)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagonalSolution {
    /// Smallest root found.
    pub x: f64,
    /// Every root bracketed by the sign scan, ascending.
    pub roots: Vec<f64>,
    pub multiple: bool,
}

/// Roots of `η` on the search interval: sign scan on 2048 uniform plus 256
/// near-zero geometric points, each sign change refined by bisection.
pub fn diagonal_roots(model: &ModelSpec) -> DiagonalSolution {
    let top = model.search_upper();
    let grid = mixed_grid(0.0, top, SCAN_POINTS, 256);
    let mut roots = Vec::new();
    let mut prev = (grid[0], eta(model, grid[0]));
    for &x in &grid[1..] {
        let v = eta(model, x);
        if v == 0.0 {
            roots.push(x);
        } else if prev.1 != 0.0 && (v > 0.0) != (prev.1 > 0.0) {
            roots.push(bisect(|t| eta(model, t), prev.0, x, prev.1));
        }
        prev = (x, v);
    }
    if roots.is_empty() {
        // η(0) < 0 <= η(top), so this only happens when η(top) rounds to 0
        roots.push(top);
    }
    roots.dedup_by(|a, b| (*a - *b).abs() <= SOLUTION_TIE);
    DiagonalSolution {
        x: roots[0],
        multiple: roots.len() > 1,
        roots,
    }
}

/// Smallest diagonal solution `x*`.
pub fn solve_diagonal(model: &ModelSpec) -> f64 {
    diagonal_roots(model).x
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoCycleSearch {
    pub pair: Option<(f64, f64)>,
    /// Limits of the even and odd `q`-iterates started at 0.
    pub even_limit: f64,
    pub odd_limit: f64,
    pub iterations: usize,
    pub diagonal_x: f64,
}

/// Follows the `q`-iterates from 0: the even ones increase to the smallest
/// fixed point of `q∘q`, the odd ones decrease to its image. Near the
/// critical activity the approach is algebraically slow, so after
/// [`MAX_Q_ITERATIONS`] the remaining interval up to `x*` is scanned for a
/// root of `q(q(x)) - x` instead.
pub fn find_two_cycle(model: &ModelSpec) -> Result<TwoCycleSearch> {
    let xs = solve_diagonal(model);
    let mut even = 0.0;
    let mut iterations = 0;
    let mut run = 0;
    while iterations < MAX_Q_ITERATIONS {
        let next = q_func(model, q_func(model, even)?)?;
        iterations += 2;
        run = if (next - even).abs() < Q_CAUCHY_TOL {
            run + 1
        } else {
            0
        };
        even = next.min(xs);
        if run >= Q_CAUCHY_RUN {
            break;
        }
    }
    let z_even = if xs - even > SOLUTION_TIE {
        scan_first_cycle_root(model, even, xs)?
    } else {
        even
    };
    let z_odd = q_func(model, z_even)?;
    let pair =
        ((z_odd - z_even).abs() > SOLUTION_TIE).then(|| (z_even.min(z_odd), z_even.max(z_odd)));
    Ok(TwoCycleSearch {
        pair,
        even_limit: z_even,
        odd_limit: z_odd,
        iterations,
        diagonal_x: xs,
    })
}

// Smallest root of q(q(x)) - x on (start, xs], or xs when there is none.
fn scan_first_cycle_root(model: &ModelSpec, start: f64, xs: f64) -> Result<f64> {
    let h = |x: f64| -> Result<f64> { Ok(q_func(model, q_func(model, x)?)? - x) };
    let noise = (64.0 * f64::EPSILON * xs.max(1.0)).max(8.0 * h(xs)?.abs());
    let width = xs - start;
    let mut pts: Vec<f64> = (1..256).map(|i| start + width * i as f64 / 256.0).collect();
    let mut k = 0;
    loop {
        let t = width * 0.5f64.powf(k as f64 / 2.0);
        if t < 1e-14 * xs.max(1e-300) {
            break;
        }
        pts.push(xs - t);
        k += 1;
    }
    pts.retain(|&p| p > start && p < xs);
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut prev = start;
    for &x in &pts {
        let v = h(x)?;
        if v < -noise {
            let f = |t: f64| h(t).unwrap_or(f64::NAN);
            return Ok(bisect(f, prev, x, 1.0));
        }
        prev = x;
    }
    Ok(xs)
}

/// Residuals `|x - λg(y)f^{Δ-1}(x)|`, `|y - λg(x)f^{Δ-1}(y)|`.
pub fn system_residuals(model: &ModelSpec, x: f64, y: f64) -> (f64, f64) {
    (
        (x - model.update(y, x)).abs(),
        (y - model.update(x, y)).abs(),
    )
}

/// Decides whether the system has exactly one nonnegative solution.
pub fn classify_uniqueness(model: &ModelSpec) -> FixedPointReport {
    let diag = diagonal_roots(model);
    let res = eta(model, diag.x).abs();
    let mut report = FixedPointReport {
        verdict: Verdict::Undetermined,
        diagonal_x: diag.x,
        two_cycle: None,
        iterations: 0,
        residuals: (res, res),
        search_interval: (0.0, model.search_upper()),
        path: SolvePath::Skipped,
        p_increasing: false,
        multiple_diagonal_roots: diag.multiple,
        reason: None,
    };
    if !model.theta.is_log_convex() {
        report.reason = Some("theta is not log-convex".into());
        return report;
    }
    if diag.multiple {
        let (a, b) = (diag.roots[0], diag.roots[1]);
        report.verdict = Verdict::NonUnique;
        report.reason = Some(format!("diagonal solutions at {a} and {b}"));
        return report;
    }
    report.p_increasing = p_is_increasing(&model.theta, model.lambda);
    if report.p_increasing {
        report.path = SolvePath::QMap;
        match find_two_cycle(model) {
            Ok(search) => {
                report.iterations = search.iterations;
                if let Some((x, y)) = search.pair {
                    report.verdict = Verdict::NonUnique;
                    report.two_cycle = Some((x, y));
                    report.residuals = system_residuals(model, x, y);
                } else {
                    report.verdict = Verdict::Unique;
                }
            }
            Err(e) => report.reason = Some(e.to_string()),
        }
    } else {
        report.path = SolvePath::Fallback;
        fallback(model, &mut report);
    }
    report
}

// g^{-1}(v): g decreases from 1/θ_0 at 0, and g(y) <= 1/(θ_{Δ-1} y^{Δ-1}).
fn g_inverse(theta: &ThetaVector, v: f64) -> Option<f64> {
    let g0 = 1.0 / theta.theta(0);
    if !(v > 0.0) || v > g0 {
        return None;
    }
    if v == g0 {
        return Some(0.0);
    }
    let e = (theta.delta() - 1) as f64;
    let hi = (1.0 / (theta.theta(theta.delta() - 1) * v)).powf(1.0 / e);
    let lv = v.ln();
    let f = |y: f64| theta.log_g(y) - lv;
    Some(bisect(f, 0.0, hi, f(0.0)))
}

// With y(x) = g^{-1}(p(x)/λ) the first equation holds; roots of
// H(x) = p(y(x)) - λ g(x) solve the second as well.
fn fallback(model: &ModelSpec, report: &mut FixedPointReport) {
    let theta = &model.theta;
    let partner = |x: f64| g_inverse(theta, p_func(theta, x) / model.lambda);
    let big_h = |x: f64| partner(x).map(|y| p_func(theta, y) - model.lambda * theta.g(x));
    let grid = mixed_grid(0.0, model.search_upper(), FALLBACK_POINTS, 256);
    let mut prev: Option<(f64, f64)> = None;
    for &x in &grid {
        let Some(v) = big_h(x) else {
            prev = None;
            continue;
        };
        if let Some((px, pv)) = prev {
            if pv != 0.0 && (v > 0.0) != (pv > 0.0) || v == 0.0 {
                let root = if v == 0.0 {
                    x
                } else {
                    bisect(|t| big_h(t).unwrap_or(f64::NAN), px, x, pv)
                };
                if let Some(y) = partner(root) {
                    if (root - y).abs() > SOLUTION_TIE {
                        let (a, b) = (root.min(y), root.max(y));
                        report.verdict = Verdict::NonUnique;
                        report.two_cycle = Some((a, b));
                        report.residuals = system_residuals(model, a, b);
                        return;
                    }
                }
            }
        }
        prev = Some((x, v));
    }
    match bounding_limits(model, DEFAULT_MAX_DEPTH) {
        Ok(lim) if lim.converged() => {
            report.iterations = lim.lower.depth;
            if lim.gap() <= SOLUTION_TIE {
                report.verdict = Verdict::Unique;
            } else {
                let (a, b) = (lim.lower.value, lim.upper.value);
                report.verdict = Verdict::NonUnique;
                report.two_cycle = Some((a, b));
                report.residuals = system_residuals(model, a, b);
            }
        }
        Ok(lim) => {
            report.iterations = lim.lower.depth;
            report.reason = Some("bounding sequences did not converge".into());
        }
        Err(e) => report.reason = Some(e.to_string()),
    }
}

/// Root law in the limit: `p_k`, `k = 0..Δ`, and the inclusion mass `p_+`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitProbabilities {
    pub zeta: f64,
    pub p: Vec<f64>,
    pub p_plus: f64,
}

impl LimitProbabilities {
    /// Law of the number of included neighbours of an excluded root.
    pub fn neighbor_law(&self) -> Result<crate::NeighborDistribution> {
        crate::NeighborDistribution::from_weights(&self.p)
    }
}

/// `p_k ∝ θ_k C(Δ,k) z^k` and `p_+ ∝ λ f^Δ(z_prev)`, normalized, in log space.
pub fn occupancy_from_ratios(model: &ModelSpec, z: f64, z_prev: f64) -> (Vec<f64>, f64) {
    let delta = model.delta();
    let lz = z.ln();
    let mut logs: Vec<f64> = (0..=delta)
        .map(|k| {
            let power = if k == 0 { 0.0 } else { k as f64 * lz };
            model.theta.theta(k).ln() + binomial(delta, k).ln() + power
        })
        .collect();
    logs.push(model.lambda.ln() + delta as f64 * model.theta.log_f(z_prev));
    let total = log_sum_exp(&logs);
    let mut p: Vec<f64> = logs.iter().map(|l| (l - total).exp()).collect();
    let plus = p.pop().expect("nonempty");
    (p, plus)
}

pub fn limit_probabilities(model: &ModelSpec) -> Result<LimitProbabilities> {
    let report = classify_uniqueness(model);
    match report.verdict {
        Verdict::Unique => {}
        Verdict::NonUnique => {
            return Err(MrfError::ContractViolation(
                "limit probabilities requested in the non-uniqueness regime".into(),
            ))
        }
        Verdict::Undetermined => {
            return Err(MrfError::Precondition(format!(
                "uniqueness undetermined: {}",
                report.reason.unwrap_or_default()
            )))
        }
    }
    let zeta = report.diagonal_x;
    let (p, p_plus) = occupancy_from_ratios(model, zeta, zeta);
    Ok(LimitProbabilities { zeta, p, p_plus })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RCriterion {
    pub x_star: f64,
    /// `|g'(x*) / p'(x*)|`.
    pub r: f64,
    pub inv_lambda: f64,
    pub satisfied: bool,
}

/// Compares `r(x*) = |g'(x*)/p'(x*)|` with `1/λ`.
pub fn r_criterion(model: &ModelSpec) -> Result<RCriterion> {
    let theta = &model.theta;
    if !p_is_increasing(theta, model.lambda) {
        return Err(MrfError::Precondition(
            "p is not increasing on the search interval".into(),
        ));
    }
    let x = solve_diagonal(model);
    let h = 1e-6 * x.max(1.0);
    let dp = central_difference(|t| p_func(theta, t), x, h);
    if dp.abs() < 1e-12 {
        return Err(MrfError::DegenerateSlope(dp));
    }
    let dg = central_difference(|t| theta.g(t), x, h);
    let r = (dg / dp).abs();
    let inv_lambda = 1.0 / model.lambda;
    Ok(RCriterion {
        x_star: x,
        r,
        inv_lambda,
        satisfied: r <= inv_lambda + 1e-9,
    })
}

/// `S[F](x) = F'''/F' - (3/2)(F''/F')²` from finite differences with step
/// `h`, using one-sided stencils within `lo..hi` near the ends.
pub fn schwarzian_of<F: FnMut(f64) -> f64>(f: F, x: f64, h: f64, lo: f64, hi: f64) -> Result<f64> {
    let [d1, d2, d3] = derivatives_123(f, x, h, lo, hi);
    if d1.abs() <= 1e-10 {
        return Err(MrfError::DegenerateSlope(d1));
    }
    Ok(d3 / d1 - 1.5 * (d2 / d1).powi(2))
}

/// Schwarzian derivative of `q` at `x`. The stencil step is `1e-3 (1 + x)`:
/// `q` varies on the scale `1 + x`, and a step tied to the interval width
/// is dominated by rounding for large or small `λ`.
pub fn schwarzian(model: &ModelSpec, x: f64) -> Result<f64> {
    if !p_is_increasing(&model.theta, model.lambda) {
        return Err(MrfError::Precondition(
            "p is not increasing on the search interval".into(),
        ));
    }
    schwarzian_unchecked(model, x)
}

fn schwarzian_unchecked(model: &ModelSpec, x: f64) -> Result<f64> {
    let top = model.search_upper();
    if !(0.0..=top).contains(&x) {
        return Err(MrfError::OutOfRange {
            value: x,
            lo: 0.0,
            hi: top,
        });
    }
    schwarzian_of(
        |t| q_func(model, t).unwrap_or(f64::NAN),
        x,
        1e-3 * (1.0 + x),
        0.0,
        top,
    )
}

/// Largest sampled `S[q]` over `n` evenly spaced points of the search
/// interval. Negative means the sign hypothesis held on every sample.
pub fn max_schwarzian(model: &ModelSpec, n: usize) -> Result<f64> {
    if !p_is_increasing(&model.theta, model.lambda) {
        return Err(MrfError::Precondition(
            "p is not increasing on the search interval".into(),
        ));
    }
    let top = model.search_upper();
    let mut worst = f64::NEG_INFINITY;
    for i in 0..n {
        let x = top * i as f64 / (n.max(2) - 1) as f64;
        worst = worst.max(schwarzian_unchecked(model, x)?);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{theta_for_family, Family};

    fn hc(delta: usize, lambda: f64) -> ModelSpec {
        ModelSpec::hardcore(delta, lambda).unwrap()
    }

    fn theta(v: &[f64]) -> ThetaVector {
        ThetaVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn p_and_inverse() {
        let t = theta(&[1.0, 1.0, 1.0, 2.0]);
        assert!((p_func(&t, 1.0) - 16.0 / 25.0).abs() < 1e-15);
        assert!((p_inverse(&t, 16.0 / 25.0).unwrap() - 1.0).abs() < 1e-12);
        let ones = ThetaVector::ones(4).unwrap();
        assert_eq!(p_func(&ones, 0.7), 0.7);
        assert_eq!(p_inverse(&ones, 0.7).unwrap(), 0.7);
        assert!(p_inverse(&t, -1.0).is_err());
        for x in [1e-6, 0.3, 2.0, 17.0] {
            let y = p_func(&t, x);
            let back = p_inverse(&t, y).unwrap();
            assert!((back - x).abs() < 1e-10 * x.max(1.0));
            assert!((p_func(&t, back) - y).abs() <= 1e-13 * y.max(1.0));
        }
    }

    #[test]
    fn analytic_p_slope_matches_difference() {
        let t = theta(&[1.0, 0.4, 0.5, 1.5]);
        for x in [0.1, 1.0, 4.0] {
            let fd = central_difference(|s| p_func(&t, s), x, 1e-6);
            assert!((p_derivative(&t, x) - fd).abs() < 1e-7);
        }
    }

    #[test]
    fn monotonicity_of_p() {
        assert!(p_is_increasing(&ThetaVector::ones(3).unwrap(), 5.0));
        assert!(!p_is_increasing(&theta(&[1.0, 1.0, 1.0, 100.0]), 1.0));
    }

    #[test]
    fn hardcore_q_and_diagonal() {
        let m = hc(3, 4.0);
        assert!((q_func(&m, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((q_func(&m, 0.5).unwrap() - 4.0 / 2.25).abs() < 1e-14);
        assert!((solve_diagonal(&m) - 1.0).abs() < 1e-12);
        let m = hc(5, 256.0 / 243.0);
        assert!((solve_diagonal(&m) - 1.0 / 3.0).abs() < 1e-12);
        let m = ModelSpec::new(
            theta_for_family(Family::TruncatedGeometric, 3).unwrap(),
            1.0,
        )
        .unwrap();
        let x = solve_diagonal(&m);
        assert!(eta(&m, x).abs() <= 1e-12);
    }

    #[test]
    fn two_cycles_of_hardcore() {
        assert!(find_two_cycle(&hc(3, 3.0)).unwrap().pair.is_none());
        assert!(find_two_cycle(&hc(3, 4.0)).unwrap().pair.is_none());
        let m = hc(3, 5.0);
        let (x, y) = find_two_cycle(&m).unwrap().pair.unwrap();
        assert!(x < 1.0 && 1.0 < y);
        assert!((q_func(&m, x).unwrap() - y).abs() < 1e-9);
        assert!((q_func(&m, y).unwrap() - x).abs() < 1e-9);
    }

    #[test]
    fn two_cycle_just_above_critical() {
        let m = hc(3, 4.0 * (1.0 + 1e-6));
        let (x, y) = find_two_cycle(&m).unwrap().pair.unwrap();
        let (rx, ry) = system_residuals(&m, x, y);
        assert!(rx < 1e-9 && ry < 1e-9);
        let m = hc(3, 4.0 * (1.0 - 1e-6));
        assert!(find_two_cycle(&m).unwrap().pair.is_none());
    }

    #[test]
    fn hardcore_verdicts() {
        assert_eq!(classify_uniqueness(&hc(3, 3.0)).verdict, Verdict::Unique);
        assert_eq!(classify_uniqueness(&hc(3, 5.0)).verdict, Verdict::NonUnique);
        assert_eq!(
            classify_uniqueness(&hc(4, 27.0 / 16.0)).verdict,
            Verdict::Unique
        );
        let r = classify_uniqueness(&hc(3, 5.0));
        let (x, y) = r.two_cycle.unwrap();
        assert!(x < y && r.residuals.0 < 1e-9 && r.residuals.1 < 1e-9);
    }

    #[test]
    fn non_log_convex_is_undetermined() {
        let m = ModelSpec::new(theta(&[1.0, 2.0, 1.0, 2.0]), 1.0).unwrap();
        let r = classify_uniqueness(&m);
        assert_eq!(r.verdict, Verdict::Undetermined);
        assert!(r.reason.is_some() && r.diagonal_x > 0.0);
    }

    #[test]
    fn fallback_path_agrees_with_bounding_sequences() {
        for lambda in [0.01, 1.0, 50.0] {
            let m = ModelSpec::new(theta(&[1.0, 1.0, 1.0, 100.0]), lambda).unwrap();
            let r = classify_uniqueness(&m);
            assert!(!r.p_increasing);
            if r.multiple_diagonal_roots {
                assert_eq!(r.verdict, Verdict::NonUnique);
                continue;
            }
            assert_eq!(r.path, SolvePath::Fallback);
            let lim = bounding_limits(&m, DEFAULT_MAX_DEPTH).unwrap();
            if r.verdict == Verdict::Unique {
                assert!(lim.gap() < 1e-9);
            } else if r.verdict == Verdict::NonUnique {
                assert!(lim.gap() > 1e-9 || r.two_cycle.is_some());
            }
        }
    }

    #[test]
    fn limit_law_at_hardcore_criticality() {
        let lp = limit_probabilities(&hc(3, 4.0)).unwrap();
        assert!((lp.p_plus - 1.0 / 3.0).abs() < 1e-10);
        for (k, c) in [1.0, 3.0, 3.0, 1.0].iter().enumerate() {
            assert!((lp.p[k] - c / 12.0).abs() < 1e-10);
        }
        assert!(matches!(
            limit_probabilities(&hc(3, 5.0)),
            Err(MrfError::ContractViolation(_))
        ));
    }

    #[test]
    fn r_criterion_hardcore() {
        let r = r_criterion(&hc(3, 4.0)).unwrap();
        assert!((r.r - 0.25).abs() < 1e-8 && r.satisfied);
        let r = r_criterion(&hc(3, 3.0)).unwrap();
        assert!(r.r < 1.0 / 3.0 && r.satisfied);
        let r = r_criterion(&hc(3, 5.0)).unwrap();
        assert!(r.r > 0.2 && !r.satisfied);
    }

    #[test]
    fn hardcore_schwarzian_closed_form() {
        for (delta, lambda) in [(3, 1.0), (3, 4.0), (5, 2.0), (3, 0.1), (4, 30.0)] {
            let m = hc(delta, lambda);
            for x in [0.0, 0.3 * lambda, 0.9 * lambda] {
                let s = schwarzian(&m, x).unwrap();
                let d = delta as f64;
                let exact = -d * (d - 2.0) / (2.0 * (x + 1.0).powi(2));
                assert!(
                    (s - exact).abs() < 1e-3 * exact.abs(),
                    "{delta} {x}: {s} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn schwarzian_of_mobius_vanishes() {
        let f = |x: f64| (2.0 * x + 1.0) / (0.5 * x + 3.0);
        let s = schwarzian_of(f, 1.0, 1e-3, 0.0, 10.0).unwrap();
        assert!(s.abs() < 1e-6);
        assert!(schwarzian_of(|_| 1.0, 1.0, 1e-3, 0.0, 10.0).is_err());
    }
}
