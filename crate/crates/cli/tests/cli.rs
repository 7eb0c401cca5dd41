use std::process::{Command, Output};

use mrf_phase::Result as CoreResult;
use mrf_phase_cli::args::VerifyArgs;
use mrf_phase_cli::checks::Context;
use mrf_phase_cli::commands::verify_with;
use serde_json::Value;

fn mrf_phase(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mrf-phase"))
        .args(args)
        .env_remove("MRF_PHASE_JOBS")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

#[test]
fn analyze_hardcore_reports_unique_and_echoes_config() {
    let v = json(&mrf_phase(&["analyze", "--delta", "3", "--lambda", "3"]));
    assert_eq!(v["report"]["verdict"], "Unique");
    assert_eq!(v["config"]["lambda"], 3.0);
    let x = v["report"]["x_star"].as_f64().unwrap();
    // x = 3/(1+x)^2 on the diagonal
    assert!((x * (1.0 + x).powi(2) - 3.0).abs() < 1e-9);
    let law: Vec<f64> =
        serde_json::from_value(v["report"]["neighbor_law"]["probs"].clone()).unwrap();
    assert!((law.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn analyze_truncated_poisson_small_activity_is_unique() {
    let v = json(&mrf_phase(&[
        "analyze",
        "--family",
        "truncated_poisson",
        "--delta",
        "3",
        "--lambda",
        "0.1",
    ]));
    assert_eq!(v["report"]["verdict"], "Unique");
    assert!(v["report"]["lambda_lower"].as_f64().unwrap() >= 1.0 / 6.0);
}

#[test]
fn inline_theta_round_trips() {
    let v = json(&mrf_phase(&[
        "analyze",
        "--theta",
        "[1, 1, 1.5, 3]",
        "--lambda",
        "0.5",
    ]));
    let theta: Vec<f64> = v["theta"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s.as_str().unwrap().parse().unwrap())
        .collect();
    assert_eq!(theta, vec![1.0, 1.0, 1.5, 3.0]);
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(
        mrf_phase(&["analyze", "--delta", "3"]).status.code(),
        Some(2)
    );
    assert_eq!(
        mrf_phase(&["analyze", "--lambda", "1"]).status.code(),
        Some(2)
    );
    assert_eq!(
        mrf_phase(&["analyze", "--theta", "[1,2]", "--lambda", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        mrf_phase(&["analyze", "--delta", "3", "--lambda", "-1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        mrf_phase(&["verify", "--only", "nonsense"]).status.code(),
        Some(2)
    );
}

#[test]
fn empty_sweep_is_header_only() {
    let out = mrf_phase(&[
        "sweep",
        "--delta",
        "3",
        "--lambda-min",
        "0.5",
        "--lambda-max",
        "8",
        "--points",
        "0",
    ]);
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "schema_version,lambda,verdict,x_star,gap,zeta_even,zeta_odd\n"
    );
}

#[test]
fn hardcore_sweep_flips_once_near_four() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let p = path.to_str().unwrap();
    let out = mrf_phase(&[
        "--jobs",
        "3",
        "sweep",
        "--delta",
        "3",
        "--lambda-min",
        "0.5",
        "--lambda-max",
        "8",
        "--points",
        "64",
        "--output",
        p,
    ]);
    assert!(out.status.success());
    let mut reader = csv::Reader::from_path(&path).unwrap();
    let rows: Vec<(f64, String)> = reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            assert_eq!(&r[0], "1");
            (r[1].parse().unwrap(), r[2].to_string())
        })
        .collect();
    assert_eq!(rows.len(), 64);
    assert!(
        rows.windows(2).all(|w| w[0].0 < w[1].0),
        "rows in grid order"
    );
    let flips: Vec<usize> = (1..rows.len())
        .filter(|&i| rows[i].1 != rows[i - 1].1)
        .collect();
    assert_eq!(flips.len(), 1);
    let i = flips[0];
    assert_eq!(rows[i - 1].1, "Unique");
    assert_eq!(rows[i].1, "NonUnique");
    let cell = rows[i].0 / rows[i - 1].0;
    assert!(rows[i - 1].0 / cell <= 4.0 && 4.0 <= rows[i].0 * cell);
}

#[test]
fn sweep_output_does_not_depend_on_jobs() {
    let args = [
        "sweep",
        "--delta",
        "4",
        "--lambda-min",
        "0.2",
        "--lambda-max",
        "20",
        "--points",
        "24",
    ];
    let one = mrf_phase(&[&["--jobs", "1"][..], &args[..]].concat());
    let four = mrf_phase(&[&["--jobs", "4"][..], &args[..]].concat());
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn depth_table_sandwiches_extremal_sequence() {
    let out = mrf_phase(&[
        "sweep",
        "--depths",
        "--delta",
        "3",
        "--lambda",
        "1",
        "--max-depth",
        "40",
    ]);
    assert!(out.status.success());
    let mut reader = csv::Reader::from_reader(&out.stdout[..]);
    assert_eq!(
        reader.headers().unwrap(),
        vec![
            "schema_version",
            "depth",
            "zeta_lower",
            "zeta_upper",
            "zeta_extremal",
            "gap"
        ]
    );
    let mut depths = 0;
    for r in reader.records() {
        let r = r.unwrap();
        depths += 1;
        if r[2].is_empty() {
            continue;
        }
        let (lo, hi, z): (f64, f64, f64) = (
            r[2].parse().unwrap(),
            r[3].parse().unwrap(),
            r[4].parse().unwrap(),
        );
        assert!(lo <= z + 1e-12 && z <= hi + 1e-12);
    }
    assert_eq!(depths, 38);
}

#[test]
fn phase_bracket_and_grid_csv() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.csv");
    let v = json(&mrf_phase(&[
        "phase",
        "--delta",
        "3",
        "--tol",
        "1e-4",
        "--grid-csv",
        grid.to_str().unwrap(),
    ]));
    let lo = v["report"]["last_unique"].as_f64().unwrap();
    let hi = v["report"]["first_nonunique"].as_f64().unwrap();
    assert!(lo <= 4.0 && 4.0 <= hi && hi - lo <= 1e-4);
    let rows = csv::Reader::from_path(&grid).unwrap().records().count();
    assert_eq!(rows, v["report"]["grid"].as_array().unwrap().len());
}

#[test]
fn perturb_reports_and_e0_scan() {
    let v = json(&mrf_phase(&[
        "perturb",
        "--delta",
        "3",
        "--c",
        "[0,1,0,0]",
        "--slopes",
    ]));
    assert_eq!(v["report"]["direction"]["classification"], "Uniqueness");
    assert!(v["report"]["slopes"]["x_c_rel_error"].as_f64().unwrap() < 1e-3);

    let out = mrf_phase(&["perturb", "--delta", "3", "--scan-e0"]);
    assert!(out.status.success());
    let verdicts: Vec<String> = csv::Reader::from_reader(&out.stdout[..])
        .records()
        .map(|r| r.unwrap()[2].to_string())
        .collect();
    let first_non = verdicts
        .iter()
        .position(|v| v == "NonUnique")
        .expect("a NonUnique row");
    assert!(verdicts[first_non..].iter().any(|v| v == "Unique"));
}

#[test]
fn oracle_matches_recursion_and_enumeration() {
    let v = json(&mrf_phase(&[
        "oracle",
        "--theta",
        "[1,2,2,5]",
        "--lambda",
        "0.7",
        "--depth",
        "4",
    ]));
    let t = &v["report"]["tree"];
    let zd = t["zeta_dp"].as_f64().unwrap();
    let zr = t["zeta_recursion"].as_f64().unwrap();
    assert!((zd - zr).abs() <= 1e-12 * zd);
    let law: Vec<f64> = serde_json::from_value(t["root_law"].clone()).unwrap();
    let (enumerated, _): (Vec<f64>, f64) =
        serde_json::from_value(t["root_law_enumerated"].clone()).unwrap();
    for (a, b) in law.iter().zip(&enumerated) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn oracle_enumerates_a_graph_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("k4.txt");
    std::fs::write(&path, "4 6\n0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n").unwrap();
    let v = json(&mrf_phase(&[
        "oracle",
        "--delta",
        "3",
        "--lambda",
        "1",
        "--graph",
        path.to_str().unwrap(),
    ]));
    assert_eq!(v["report"]["graph"]["z"], 5.0);
    assert!((v["report"]["graph"]["inclusion"].as_f64().unwrap() - 0.2).abs() < 1e-15);
}

#[test]
fn mcmc_small_run_with_samples() {
    let dir = tempfile::tempdir().unwrap();
    let samples = dir.path().join("samples.csv");
    let args = [
        "mcmc",
        "--n",
        "100",
        "--delta",
        "3",
        "--lambda",
        "1",
        "--sweeps",
        "600",
        "--burnin",
        "100",
        "--chains",
        "2",
        "--seed",
        "5",
        "--thin",
        "10",
        "--samples-csv",
        samples.to_str().unwrap(),
    ];
    let v = json(&mrf_phase(&args));
    assert_eq!(v["report"]["estimate"]["chains"], 2);
    assert!(v["report"]["tv_to_prediction"].as_f64().unwrap() < 0.1);
    let rows = csv::Reader::from_path(&samples).unwrap().records().count();
    assert_eq!(rows, 2 * 50);
    assert_eq!(
        mrf_phase(&args).stdout,
        mrf_phase(&args).stdout,
        "seeded runs repeat"
    );
}

#[test]
fn verify_only_runs_the_named_checks() {
    let out = mrf_phase(&["verify", "--only", "identities,asymptotic"]);
    assert_eq!(out.status.code(), Some(0));
    let lines: Vec<Value> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let names: Vec<&str> = lines.iter().map(|l| l["check"].as_str().unwrap()).collect();
    assert_eq!(names, ["identities", "asymptotic"]);
    assert!(lines.iter().all(|l| l["pass"] == true));
}

fn tampered_pi(delta: usize) -> CoreResult<Vec<f64>> {
    let mut pi = mrf_phase::perturbation::pi_vector(delta)?;
    pi[1] = -pi[1];
    Ok(pi)
}

#[test]
fn tampered_pi_fails_identity_and_sign_checks() {
    let ctx = Context {
        pi: tampered_pi,
        ..Context::default()
    };
    let args = VerifyArgs {
        only: Some(vec![
            "identities".into(),
            "pi-signs".into(),
            "asymptotic".into(),
        ]),
        seed: None,
    };
    let mut out = Vec::new();
    assert!(!verify_with(&ctx, &args, &mut out).unwrap());
    let failed: Vec<String> = String::from_utf8(out)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str::<Value>(l).unwrap())
        .filter(|l| l["pass"] == false)
        .map(|l| l["check"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(failed, ["identities", "pi-signs"]);
}
