use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

use mrf_phase::fixed_point::{
    classify_uniqueness, occupancy_from_ratios, p_func, p_inverse, solve_diagonal, system_residuals,
};
use mrf_phase::mcmc::{gen_random_regular, heat_bath_sweep, ChainState, FlipWeights};
use mrf_phase::model::{induced_mu, is_reverse_ultra_log_concave};
use mrf_phase::oracle::{dp_by_enumeration, dp_exact, zeta_from_dp, Boundary, Potentials};
use mrf_phase::phase::{lambda_lower, lambda_upper, psi};
use mrf_phase::recursion::{boundary_seq, bounding_sequences, contraction_check};
use mrf_phase::{ModelSpec, ThetaVector, Verdict};

/// Log-convex θ: positive θ₀, then nondecreasing consecutive log-ratios.
fn log_convex_theta() -> impl Strategy<Value = ThetaVector> {
    (3usize..=6)
        .prop_flat_map(|d| {
            (
                0.5f64..2.0,
                -1.5f64..1.5,
                prop::collection::vec(0.0f64..0.8, d - 1),
            )
        })
        .prop_map(|(t0, r0, steps)| {
            let mut log_ratio = r0;
            let mut v = vec![t0, t0 * r0.exp()];
            for s in steps {
                log_ratio += s;
                v.push(v.last().unwrap() * log_ratio.exp());
            }
            ThetaVector::new(v).unwrap()
        })
}

fn any_theta() -> impl Strategy<Value = ThetaVector> {
    (3usize..=6)
        .prop_flat_map(|d| prop::collection::vec(0.2f64..5.0, d + 1))
        .prop_map(|v| ThetaVector::new(v).unwrap())
}

fn scaled(theta: &ThetaVector, c: f64) -> ThetaVector {
    ThetaVector::new(theta.values().iter().map(|t| c * t).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, .. ProptestConfig::default() })]

    #[test]
    fn bounding_sequences_sandwich_every_boundary(theta in log_convex_theta(), log_lambda in -3.0f64..3.0) {
        let model = ModelSpec::new(theta, log_lambda.exp()).unwrap();
        let d_max = 60;
        let seqs = bounding_sequences(&model, d_max).unwrap();
        let free = boundary_seq(&model, Boundary::Free, d_max).unwrap();
        let excluded = boundary_seq(&model, Boundary::AllExcluded, d_max).unwrap();
        for d in seqs.start_depth..=d_max {
            let (lo, hi) = (seqs.lower_at(d), seqs.upper_at(d));
            let slack = 1e-12 * hi.max(1.0);
            prop_assert!(lo <= hi + slack);
            for z in [seqs.extremal_at(d), free[d - 2], excluded[d - 2]] {
                prop_assert!(lo - slack <= z && z <= hi + slack, "d={} {} ∉ [{}, {}]", d, z, lo, hi);
            }
            if d >= seqs.start_depth + 2 {
                prop_assert!(lo + slack >= seqs.lower_at(d - 2));
                prop_assert!(hi <= seqs.upper_at(d - 2) + slack);
            }
        }
    }

    #[test]
    fn recursion_agrees_with_exact_ratios(theta in any_theta(), log_lambda in -2.0f64..2.0, b in 0usize..3) {
        let model = ModelSpec::new(theta, log_lambda.exp()).unwrap();
        let boundary = Boundary::ALL[b];
        let seq = boundary_seq(&model, boundary, 12).unwrap();
        for d in 3..=12 {
            let exact = zeta_from_dp(&model, d, boundary).unwrap();
            prop_assert!((seq[d - 2] - exact).abs() <= 1e-10 * exact.max(1e-300), "d={}", d);
        }
    }

    #[test]
    fn common_scale_of_potentials_and_activity_is_invisible(
        theta in log_convex_theta(), log_lambda in -3.0f64..3.0, log_c in -2.0f64..2.0,
    ) {
        let c = log_c.exp();
        let lambda = log_lambda.exp();
        let t2 = scaled(&theta, c);
        prop_assert!((psi(&t2) - psi(&theta)).abs() <= 1e-12 * psi(&theta));
        prop_assert!((lambda_lower(&t2) / lambda_lower(&theta) - c).abs() <= 1e-12 * c);
        prop_assert!((lambda_upper(&t2) / lambda_upper(&theta) - c).abs() <= 1e-12 * c);
        let a = ModelSpec::new(theta, lambda).unwrap();
        let b = ModelSpec::new(t2, c * lambda).unwrap();
        prop_assert!((solve_diagonal(&a) - solve_diagonal(&b)).abs() <= 1e-9 * solve_diagonal(&a).max(1.0));
    }

    #[test]
    fn sandwich_bounds_decide_the_verdict(theta in log_convex_theta()) {
        let below = ModelSpec::new(theta.clone(), 0.9 * lambda_lower(&theta)).unwrap();
        let above = ModelSpec::new(theta.clone(), 1.1 * lambda_upper(&theta)).unwrap();
        prop_assert_eq!(classify_uniqueness(&below).verdict, Verdict::Unique);
        prop_assert_eq!(classify_uniqueness(&above).verdict, Verdict::NonUnique);
    }

    #[test]
    fn gaps_contract_below_the_lower_bound(theta in log_convex_theta(), frac in 0.05f64..0.99) {
        let model = ModelSpec::new(theta.clone(), frac * lambda_lower(&theta)).unwrap();
        let r = contraction_check(&model).unwrap();
        prop_assert!(r.holds, "first violation at {:?}", r.first_violation);
        prop_assert!(r.worst_ratio <= r.factor + 1e-9);
    }

    #[test]
    fn diagonal_solution_solves_the_system(theta in any_theta(), log_lambda in -3.0f64..3.0) {
        let model = ModelSpec::new(theta, log_lambda.exp()).unwrap();
        let x = solve_diagonal(&model);
        let (r1, r2) = system_residuals(&model, x, x);
        prop_assert!(r1.abs() <= 1e-9 * x.max(1.0) && r2.abs() <= 1e-9 * x.max(1.0));
    }

    #[test]
    fn p_inverse_round_trips(theta in any_theta(), log_x in -6.0f64..4.0) {
        let y = p_func(&theta, log_x.exp());
        let x = p_inverse(&theta, y).unwrap();
        prop_assert!((p_func(&theta, x) - y).abs() <= 1e-9 * y);
    }

    #[test]
    fn occupancy_law_is_a_distribution(theta in any_theta(), z in 1e-3f64..1e3, z_prev in 1e-3f64..1e3) {
        let model = ModelSpec::new(theta, 1.0).unwrap();
        let (p, plus) = occupancy_from_ratios(&model, z, z_prev);
        prop_assert!(p.iter().chain([&plus]).all(|&v| (0.0..=1.0).contains(&v)));
        prop_assert!((p.iter().sum::<f64>() + plus - 1.0).abs() < 1e-12);
    }

    #[test]
    fn induced_law_shape_tracks_log_convexity(theta in any_theta(), log_x in -3.0f64..3.0) {
        let mu = induced_mu(&theta, 1.0, log_x.exp()).unwrap();
        prop_assert_eq!(is_reverse_ultra_log_concave(&mu).unwrap(), theta.is_log_convex());
    }

    #[test]
    fn heat_bath_keeps_an_independent_set(seed in any::<u64>(), log_lambda in -2.0f64..3.0, theta in any_theta()) {
        let graph = gen_random_regular(40, theta.delta(), seed, None).unwrap();
        let model = ModelSpec::new(theta, log_lambda.exp()).unwrap();
        let weights = FlipWeights::new(&model);
        let mut state = ChainState::new(&graph, seed, 0);
        for _ in 0..20 {
            heat_bath_sweep(&weights, &graph, &mut state);
            prop_assert!(state.is_independent(&graph));
            prop_assert!(state.counts_consistent(&graph));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, .. ProptestConfig::default() })]

    #[test]
    fn exact_recursion_equals_enumeration(
        nums in prop::collection::vec(1i64..30, 5), dens in prop::collection::vec(1i64..9, 5), b in 0usize..3,
    ) {
        let q: Vec<BigRational> = nums.iter().zip(&dens).map(|(&n, &d)| BigRational::new(BigInt::from(n), BigInt::from(d))).collect();
        let pot = Potentials { theta: q[..4].to_vec(), lambda: q[4].clone() };
        for d in [2, 3, 4] {
            prop_assert_eq!(
                dp_exact(&pot, d, Boundary::ALL[b]).unwrap(),
                dp_by_enumeration(&pot, d, Boundary::ALL[b]).unwrap()
            );
        }
    }
}
