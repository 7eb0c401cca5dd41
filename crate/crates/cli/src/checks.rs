//! The acceptance checks behind `mrf-phase verify` and the `acceptance`
//! test target. Each check has a runtime budget; exceeding it fails the
//! check.

use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use mrf_phase::fixed_point::{classify_uniqueness, limit_probabilities};
use mrf_phase::mcmc::{
    empirical_state_distribution, estimate_neighbor_law, exact_state_distribution, fit_mu_shape,
    gen_random_regular, tv_distance, RegularGraph, SamplerConfig,
};
use mrf_phase::model::{
    induced_mu, is_reverse_ultra_log_concave, random_log_convex_theta, random_theta,
    theta_for_family,
};
use mrf_phase::oracle::{
    conditional_pk, conditional_pk_by_enumeration, dp_by_enumeration, dp_exact, masses_to_f64,
    Boundary, FiniteGraph, Potentials,
};
use mrf_phase::perturbation::{
    e0_pattern, identity_check_with_pi, random_convex_direction, slope_report,
};
use mrf_phase::phase::{critical_bracket, hardcore_critical, lambda_lower, lambda_upper};
use mrf_phase::recursion::{contraction_check, parity_gap, DEFAULT_MAX_DEPTH};
use mrf_phase::{ModelSpec, NeighborDistribution, Result, ThetaVector, Verdict};

/// Supplies `π` for the checks that read it, so a tampered formula can be
/// injected.
pub type PiProvider = fn(usize) -> Result<Vec<f64>>;

#[derive(Clone, Copy)]
pub struct Context {
    pub pi: PiProvider,
    pub seed: u64,
}

impl Default for Context {
    fn default() -> Self {
        Self {
            pi: mrf_phase::perturbation::pi_vector,
            seed: 20_240_611,
        }
    }
}

pub struct Check {
    pub id: u8,
    pub name: &'static str,
    pub budget_seconds: f64,
    run: fn(&Context) -> Result<Outcome>,
}

pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome {
        pass,
        detail: detail.into(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub id: u8,
    pub check: String,
    pub pass: bool,
    pub seconds: f64,
    pub budget_seconds: f64,
    pub detail: String,
}

impl CheckResult {
    pub fn line(&self) -> String {
        format!(
            "{} [{:>2}] {}: {} ({:.2}s of {:.0}s)",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.check,
            self.detail,
            self.seconds,
            self.budget_seconds
        )
    }
}

pub fn all_checks() -> Vec<Check> {
    vec![
        Check {
            id: 1,
            name: "threshold",
            budget_seconds: 30.0,
            run: threshold,
        },
        Check {
            id: 2,
            name: "sandwich",
            budget_seconds: 300.0,
            run: sandwich,
        },
        Check {
            id: 3,
            name: "identities",
            budget_seconds: 1.0,
            run: identities,
        },
        Check {
            id: 4,
            name: "pi-signs",
            budget_seconds: 1.0,
            run: pi_signs,
        },
        Check {
            id: 5,
            name: "slopes",
            budget_seconds: 120.0,
            run: slopes,
        },
        Check {
            id: 6,
            name: "e0-reentry",
            budget_seconds: 60.0,
            run: e0_reentry,
        },
        Check {
            id: 7,
            name: "oracle",
            budget_seconds: 120.0,
            run: oracle,
        },
        Check {
            id: 8,
            name: "bounding",
            budget_seconds: 60.0,
            run: bounding,
        },
        Check {
            id: 9,
            name: "mcmc",
            budget_seconds: 600.0,
            run: mcmc,
        },
        Check {
            id: 10,
            name: "k4",
            budget_seconds: 60.0,
            run: k4,
        },
        Check {
            id: 11,
            name: "asymptotic",
            budget_seconds: 1.0,
            run: asymptotic,
        },
        Check {
            id: 12,
            name: "ultra-log-concave",
            budget_seconds: 5.0,
            run: ultra_log_concave,
        },
    ]
}

pub fn check_names() -> Vec<&'static str> {
    all_checks().iter().map(|c| c.name).collect()
}

/// Runs the checks whose names are in `only` (all when `None`), calling
/// `report` after each one.
pub fn run_checks<F: FnMut(&CheckResult)>(
    ctx: &Context,
    only: Option<&[String]>,
    mut report: F,
) -> std::result::Result<Vec<CheckResult>, String> {
    let checks = all_checks();
    if let Some(names) = only {
        if let Some(bad) = names
            .iter()
            .find(|n| !checks.iter().any(|c| c.name == n.as_str()))
        {
            return Err(format!(
                "unknown check `{bad}`; known: {}",
                check_names().join(", ")
            ));
        }
    }
    let mut out = Vec::new();
    for c in checks {
        if only.is_some_and(|names| !names.iter().any(|n| n == c.name)) {
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = match (c.run)(ctx) {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let seconds = start.elapsed().as_secs_f64();
        let over = seconds > c.budget_seconds;
        let result = CheckResult {
            id: c.id,
            check: c.name.to_string(),
            pass: pass && !over,
            seconds,
            budget_seconds: c.budget_seconds,
            detail: if over {
                format!("{detail}; over runtime budget")
            } else {
                detail
            },
        };
        report(&result);
        out.push(result);
    }
    Ok(out)
}

fn threshold(_: &Context) -> Result<Outcome> {
    let rows = (3..=6usize)
        .into_par_iter()
        .map(|d| {
            let b = critical_bracket(&ThetaVector::ones(d)?, 1e-6)?;
            let target = hardcore_critical(d);
            let ok = match (b.last_unique, b.first_nonunique) {
                (Some(lo), Some(hi)) => {
                    !b.partial && lo <= target && target <= hi && hi - lo <= 1e-6
                }
                _ => false,
            };
            Ok((d, ok, b.last_unique, b.first_nonunique, target))
        })
        .collect::<Result<Vec<_>>>()?;
    let bad: Vec<_> = rows.iter().filter(|r| !r.1).collect();
    let detail = rows
        .iter()
        .map(|(d, _, lo, hi, t)| {
            format!(
                "Δ={d}: [{:.9}, {:.9}] ∋ {t:.9}",
                lo.unwrap_or(f64::NAN),
                hi.unwrap_or(f64::NAN)
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    outcome(bad.is_empty(), detail)
}

fn sandwich(ctx: &Context) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let thetas = (0..100)
        .map(|i| random_log_convex_theta(3 + i % 4, 10.0, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let failures: Vec<String> = thetas
        .par_iter()
        .enumerate()
        .map(|(i, t)| {
            let below =
                classify_uniqueness(&ModelSpec::new(t.clone(), 0.99 * lambda_lower(t))?).verdict;
            let above =
                classify_uniqueness(&ModelSpec::new(t.clone(), 1.01 * lambda_upper(t))?).verdict;
            Ok((i, below, above))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|(_, b, a)| *b != Verdict::Unique || *a != Verdict::NonUnique)
        .map(|(i, b, a)| format!("#{i}: {b} below, {a} above"))
        .collect();
    let n = failures.len();
    outcome(
        n == 0,
        format!("{n} exceptions among 100 models {}", failures.join(", "))
            .trim_end()
            .to_string(),
    )
}

fn identities(ctx: &Context) -> Result<Outcome> {
    let mut bad = Vec::new();
    for d in 3..=12 {
        let r = identity_check_with_pi(d, 1e-10, &(ctx.pi)(d)?)?;
        bad.extend(
            r.identities
                .iter()
                .filter(|i| !i.holds)
                .map(|i| format!("Δ={d} {}", i.name)),
        );
    }
    let detail = if bad.is_empty() {
        "six identities hold for Δ=3..12 at 1e-10".to_string()
    } else {
        format!("violated: {}", bad.join(", "))
    };
    outcome(bad.is_empty(), detail)
}

fn pi_signs(ctx: &Context) -> Result<Outcome> {
    let mut bad = Vec::new();
    for d in 3..=20 {
        let pi = (ctx.pi)(d)?;
        let ok = pi[0] > 0.0 && pi[1] < 0.0 && pi[2] < 0.0 && pi[3..].iter().all(|&v| v > 0.0);
        if !ok {
            bad.push(d);
        }
    }
    let detail = if bad.is_empty() {
        "(+, −, −, +, …, +) for Δ=3..20".to_string()
    } else {
        format!("pattern broken at Δ = {bad:?}")
    };
    outcome(bad.is_empty(), detail)
}

fn slopes(ctx: &Context) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed ^ 0x5);
    let dirs: Vec<(usize, Vec<f64>)> = (0..30)
        .map(|i| {
            let d = 3 + i % 3;
            (d, random_convex_direction(d, &mut rng))
        })
        .collect();
    let reports = dirs
        .par_iter()
        .map(|(d, c)| slope_report(*d, c))
        .collect::<Result<Vec<_>>>()?;
    let worst_x = reports
        .iter()
        .map(|r| r.x_c_rel_error())
        .fold(0.0, f64::max);
    let worst_g = reports
        .iter()
        .map(|r| r.gap_rel_error())
        .fold(0.0, f64::max);
    outcome(
        worst_x <= 1e-3 && worst_g <= 1e-3,
        format!("30 directions, worst relative error x_c {worst_x:.2e}, gap slope {worst_g:.2e}"),
    )
}

fn e0_reentry(_: &Context) -> Result<Outcome> {
    let p = e0_pattern(3, 1e3)?;
    outcome(
        p.exhibits_reentry(),
        format!(
            "NonUnique at h = {:?}, Unique again at h = {:?}",
            p.nonunique_at, p.unique_at
        ),
    )
}

fn rational(rng: &mut ChaCha8Rng) -> BigRational {
    BigRational::new(
        BigInt::from(rng.gen_range(1..=40)),
        BigInt::from(rng.gen_range(1..=12)),
    )
}

fn oracle(ctx: &Context) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed ^ 0x7);
    let pots: Vec<Potentials<BigRational>> = (0..20)
        .map(|_| Potentials {
            theta: (0..4).map(|_| rational(&mut rng)).collect(),
            lambda: rational(&mut rng),
        })
        .collect();
    let results = pots
        .par_iter()
        .map(|pot| {
            let mut exact_ok = true;
            let mut worst = 0.0f64;
            for d in [3, 4] {
                for b in Boundary::ALL {
                    exact_ok &= dp_exact(pot, d, b)? == dp_by_enumeration(pot, d, b)?;
                }
                let model = float_model(pot)?;
                let (p, plus) = conditional_pk(&model, d, Boundary::AllIncluded)?;
                let (q, qplus) = masses_to_f64(&conditional_pk_by_enumeration(
                    pot,
                    d,
                    Boundary::AllIncluded,
                )?);
                worst = p
                    .iter()
                    .zip(&q)
                    .map(|(a, b)| (a - b).abs())
                    .fold(worst, f64::max);
                worst = worst.max((plus - qplus).abs());
            }
            Ok((exact_ok, worst))
        })
        .collect::<Result<Vec<_>>>()?;
    let exact = results.iter().filter(|r| r.0).count();
    let worst = results.iter().map(|r| r.1).fold(0.0, f64::max);
    outcome(
        exact == 20 && worst <= 1e-12,
        format!("exact DP == enumeration for {exact}/20 models; worst conditional law error {worst:.1e}"),
    )
}

fn float_model(pot: &Potentials<BigRational>) -> Result<ModelSpec> {
    let f = |q: &BigRational| q.to_f64().unwrap_or(f64::NAN);
    ModelSpec::new(
        ThetaVector::new(pot.theta.iter().map(f).collect())?,
        f(&pot.lambda),
    )
}

fn bounding(ctx: &Context) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed ^ 0x8);
    let mut thetas = (3..=6).map(ThetaVector::ones).collect::<Result<Vec<_>>>()?;
    for i in 0..8 {
        thetas.push(random_log_convex_theta(3 + i % 4, 10.0, &mut rng)?);
    }
    let rows = thetas
        .par_iter()
        .map(|t| {
            let lo = lambda_lower(t);
            let mut ok = true;
            let mut worst_excess = f64::NEG_INFINITY;
            for frac in [0.5, 0.9, 0.99] {
                let r = contraction_check(&ModelSpec::new(t.clone(), frac * lo)?)?;
                ok &= r.holds && r.worst_ratio <= r.factor + 1e-9;
                worst_excess = worst_excess.max(r.worst_ratio - r.factor);
            }
            let mut min_gap = f64::INFINITY;
            for frac in [1.01, 2.0] {
                let g = parity_gap(
                    &ModelSpec::new(t.clone(), frac * lambda_upper(t))?,
                    DEFAULT_MAX_DEPTH,
                )?;
                min_gap = min_gap.min(g.gap);
            }
            Ok((ok && min_gap > 1e-3, worst_excess, min_gap))
        })
        .collect::<Result<Vec<_>>>()?;
    let failed = rows.iter().filter(|r| !r.0).count();
    let excess = rows.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    let gap = rows.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
    outcome(
        failed == 0,
        format!(
            "{} models: max (ratio − λ/λ̲) {excess:.2e}, min parity gap above λ̄ {gap:.3e}, {failed} failures",
            rows.len()
        ),
    )
}

fn mcmc(ctx: &Context) -> Result<Outcome> {
    let graph = gen_random_regular(2000, 3, ctx.seed, Some(6))?;
    let config = SamplerConfig {
        sweeps: 200_000,
        burn_in: SamplerConfig::DEFAULT_BURN_IN,
        chains: 4,
        seed: ctx.seed,
        thin: SamplerConfig::DEFAULT_THIN,
    };
    let mut parts = Vec::new();
    let mut ok = true;
    for (label, theta, lambda) in [
        ("binomial λ=1", ThetaVector::ones(3)?, 1.0),
        (
            "truncated_poisson λ=0.1",
            theta_for_family(mrf_phase::Family::TruncatedPoisson, 3)?,
            0.1,
        ),
    ] {
        let model = ModelSpec::new(theta.clone(), lambda)?;
        let limit = limit_probabilities(&model)?;
        let predicted = if theta == ThetaVector::ones(3)? {
            NeighborDistribution::binomial(3, limit.zeta / (1.0 + limit.zeta))?
        } else {
            limit.neighbor_law()?
        };
        let est = estimate_neighbor_law(&model, &graph, &config)?;
        let tv = est.law.tv_distance(&predicted)?;
        let fit = fit_mu_shape(&est.law, &theta)?;
        ok &= tv < 0.02 && fit.residual < 0.05;
        parts.push(format!(
            "{label}: TV {tv:.4}, fit residual {:.4}",
            fit.residual
        ));
    }
    let girth = graph.girth_lower_bound.unwrap_or(0);
    outcome(ok, format!("n=2000 girth {girth}; {}", parts.join("; ")))
}

fn k4(ctx: &Context) -> Result<Outcome> {
    let graph = RegularGraph::from_finite(&FiniteGraph::complete(4))?;
    let model = ModelSpec::hardcore(3, 1.0)?;
    let exact = exact_state_distribution(&model, &graph)?;
    let fifths = exact
        .iter()
        .filter(|&&p| p > 0.0)
        .all(|&p| (p - 0.2).abs() < 1e-15)
        && exact.iter().filter(|&&p| p > 0.0).count() == 5;
    let config = SamplerConfig {
        sweeps: 1_000_000,
        burn_in: 1_000,
        chains: 1,
        seed: ctx.seed,
        thin: SamplerConfig::DEFAULT_THIN,
    };
    let emp = empirical_state_distribution(&model, &graph, &config)?;
    let tv = tv_distance(&emp, &exact)?;
    outcome(
        fifths && tv < 0.01,
        format!("exact law uniform over 5 sets: {fifths}; TV after 10⁶ sweeps {tv:.4}"),
    )
}

fn asymptotic(_: &Context) -> Result<Outcome> {
    let v = 100.0 * hardcore_critical(100);
    let rel = (v / std::f64::consts::E - 1.0).abs();
    outcome(
        rel < 0.05,
        format!("Δλ_Δ at Δ=100 is {v:.5}, {:.2}% from e", 100.0 * rel),
    )
}

fn ultra_log_concave(ctx: &Context) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed ^ 0xc);
    let mut mismatches = 0;
    let mut convex = 0;
    for i in 0..200 {
        let d = 3 + i % 6;
        let theta = if i % 2 == 0 {
            random_log_convex_theta(d, 10.0, &mut rng)?
        } else {
            random_theta(d, 3.0, &mut rng)?
        };
        let c = rng.gen_range(0.1..10.0);
        let x = (rng.gen_range(-2.3f64..2.3)).exp();
        let mu: NeighborDistribution = induced_mu(&theta, c, x)?;
        let lc = theta.is_log_convex();
        convex += usize::from(lc);
        if is_reverse_ultra_log_concave(&mu)? != lc {
            mismatches += 1;
        }
    }
    outcome(
        mismatches == 0,
        format!("{mismatches} mismatches over 200 models ({convex} log-convex)"),
    )
}
