use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{anyhow, bail, ensure, Context as _, Result};
use rayon::prelude::*;
use serde::Serialize;

use mrf_phase::fixed_point::{classify_uniqueness, limit_probabilities, LimitProbabilities};
use mrf_phase::mcmc::{
    estimate_neighbor_law, fit_mu_shape, gen_random_regular, heat_bath_sweep, ChainState,
    FlipWeights, MuFit, NeighborEstimate, RegularGraph, SamplerConfig,
};
use mrf_phase::model::{induced_mu, theta_for_family_name};
use mrf_phase::oracle::{
    conditional_pk, conditional_pk_by_enumeration, dp_partition, enumerate_z, masses_to_f64,
    small_graph_neighbor_law, zeta_from_dp, Boundary, FiniteGraph, Potentials,
};
use mrf_phase::perturbation::{
    classify_direction, e0_pattern, slope_report, PerturbationReport, SlopeReport,
};
use mrf_phase::phase::{critical_bracket, lambda_lower, lambda_upper, psi};
use mrf_phase::recursion::{
    boundary_seq, bounding_sequences, parity_gap, DEFAULT_MAX_DEPTH, EXTREMAL_START,
};
use mrf_phase::{FixedPointReport, ModelSpec, NeighborDistribution, ThetaVector, Verdict};

use crate::args::{
    AnalyzeArgs, McmcArgs, OracleArgs, PerturbArgs, PhaseArgs, Scale, SweepArgs, ThetaArgs,
    VerifyArgs,
};
use crate::checks::{run_checks, Context};
use crate::Out;

/// Version of every CSV layout written here; first column of each row.
pub const SCHEMA_VERSION: u32 = 1;

pub fn resolve_theta(args: &ThetaArgs) -> Result<ThetaVector> {
    let theta: ThetaVector = if let Some(text) = &args.theta {
        serde_json::from_str(text).context("parsing --theta")?
    } else if let Some(path) = &args.theta_file {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
    } else if let Some(family) = &args.family {
        let delta = args
            .delta
            .ok_or_else(|| anyhow!("--family needs --delta"))?;
        theta_for_family_name(family, delta)?
    } else if let Some(delta) = args.delta {
        ThetaVector::ones(delta)?
    } else {
        bail!("give the potentials with --theta, --theta-file or --family, or --delta alone for the hardcore model");
    };
    if let Some(d) = args.delta {
        ensure!(
            theta.delta() == d,
            "--delta {d} disagrees with θ of length {}",
            theta.delta() + 1
        );
    }
    Ok(theta)
}

#[derive(Serialize)]
struct Envelope<'a, C: Serialize, R: Serialize> {
    config: &'a C,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta: Option<&'a ThetaVector>,
    report: R,
}

fn emit<C: Serialize, R: Serialize>(
    out: &mut Out,
    config: &C,
    theta: Option<&ThetaVector>,
    report: R,
) -> Result<()> {
    serde_json::to_writer_pretty(
        &mut *out,
        &Envelope {
            config,
            theta,
            report,
        },
    )?;
    writeln!(out)?;
    Ok(())
}

/// CSV writer aimed at `path`, or at `out` when no path is given.
fn csv_sink<'a>(path: Option<&Path>, out: &'a mut Out) -> Result<csv::Writer<Box<dyn Write + 'a>>> {
    let sink: Box<dyn Write + 'a> = match path {
        Some(p) => {
            Box::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?)
        }
        None => Box::new(out),
    };
    Ok(csv::Writer::from_writer(sink))
}

#[derive(Serialize)]
struct AnalyzeReport {
    delta: usize,
    lambda: f64,
    log_convex: bool,
    psi: f64,
    lambda_lower: f64,
    lambda_upper: f64,
    verdict: Verdict,
    x_star: f64,
    two_cycle: Option<(f64, f64)>,
    fixed_point: FixedPointReport,
    limit: Option<LimitProbabilities>,
    neighbor_law: Option<NeighborDistribution>,
    /// `μ(k) ∝ θ_k C(Δ,k) x*^k`.
    induced_mu: NeighborDistribution,
}

pub fn analyze(args: &AnalyzeArgs, out: &mut Out) -> Result<()> {
    let theta = resolve_theta(&args.model)?;
    let model = ModelSpec::new(theta.clone(), args.lambda)?;
    let fp = classify_uniqueness(&model);
    let limit = limit_probabilities(&model).ok();
    let neighbor_law = limit.as_ref().map(|l| l.neighbor_law()).transpose()?;
    let report = AnalyzeReport {
        delta: theta.delta(),
        lambda: args.lambda,
        log_convex: theta.is_log_convex(),
        psi: psi(&theta),
        lambda_lower: lambda_lower(&theta),
        lambda_upper: lambda_upper(&theta),
        verdict: fp.verdict,
        x_star: fp.diagonal_x,
        two_cycle: fp.two_cycle,
        induced_mu: induced_mu(&theta, 1.0, fp.diagonal_x.max(f64::MIN_POSITIVE))?,
        fixed_point: fp,
        limit,
        neighbor_law,
    };
    emit(out, args, Some(&theta), report)
}

#[derive(Serialize)]
struct SweepRow {
    schema_version: u32,
    lambda: f64,
    verdict: Verdict,
    x_star: f64,
    gap: Option<f64>,
    zeta_even: Option<f64>,
    zeta_odd: Option<f64>,
}

#[derive(Serialize)]
struct DepthRow {
    schema_version: u32,
    depth: usize,
    zeta_lower: Option<f64>,
    zeta_upper: Option<f64>,
    zeta_extremal: f64,
    gap: Option<f64>,
}

pub fn lambda_grid(lo: f64, hi: f64, points: usize, scale: Scale) -> Result<Vec<f64>> {
    ensure!(
        lo > 0.0 && hi >= lo && hi.is_finite(),
        "need 0 < --lambda-min <= --lambda-max, got [{lo}, {hi}]"
    );
    Ok(match points {
        0 => Vec::new(),
        1 => vec![lo],
        n => (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                match scale {
                    Scale::Log => (lo.ln() + t * (hi / lo).ln()).exp(),
                    Scale::Linear => lo + t * (hi - lo),
                }
            })
            .collect(),
    })
}

fn sweep_row(theta: &ThetaVector, lambda: f64) -> SweepRow {
    let row = |verdict, x_star, pg: Option<mrf_phase::recursion::ParityGap>| SweepRow {
        schema_version: SCHEMA_VERSION,
        lambda,
        verdict,
        x_star,
        gap: pg.map(|p| p.gap),
        zeta_even: pg.map(|p| p.even.value),
        zeta_odd: pg.map(|p| p.odd.value),
    };
    match ModelSpec::new(theta.clone(), lambda) {
        Ok(model) => {
            let fp = classify_uniqueness(&model);
            row(
                fp.verdict,
                fp.diagonal_x,
                parity_gap(&model, DEFAULT_MAX_DEPTH).ok(),
            )
        }
        Err(_) => row(Verdict::Undetermined, f64::NAN, None),
    }
}

pub fn sweep(args: &SweepArgs, out: &mut Out) -> Result<()> {
    let theta = resolve_theta(&args.model)?;
    let mut w = csv_sink(args.output.as_deref(), out)?;
    if args.depths {
        let lambda = args
            .lambda
            .ok_or_else(|| anyhow!("--depths needs --lambda"))?;
        let seqs = bounding_sequences(&ModelSpec::new(theta, lambda)?, args.max_depth)?;
        for depth in EXTREMAL_START..=seqs.max_depth() {
            let bounded = depth >= seqs.start_depth;
            w.serialize(DepthRow {
                schema_version: SCHEMA_VERSION,
                depth,
                zeta_lower: bounded.then(|| seqs.lower_at(depth)),
                zeta_upper: bounded.then(|| seqs.upper_at(depth)),
                zeta_extremal: seqs.extremal_at(depth),
                gap: bounded.then(|| seqs.gap_at(depth)),
            })?;
        }
    } else {
        let (lo, hi) = (
            args.lambda_min.unwrap_or(f64::NAN),
            args.lambda_max.unwrap_or(f64::NAN),
        );
        let grid = lambda_grid(lo, hi, args.points, args.scale)?;
        if grid.is_empty() {
            w.write_record([
                "schema_version",
                "lambda",
                "verdict",
                "x_star",
                "gap",
                "zeta_even",
                "zeta_odd",
            ])?;
        }
        let rows: Vec<SweepRow> = grid.par_iter().map(|&l| sweep_row(&theta, l)).collect();
        for row in rows {
            w.serialize(row)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct GridRow {
    schema_version: u32,
    lambda: f64,
    verdict: Verdict,
}

pub fn phase(args: &PhaseArgs, out: &mut Out) -> Result<()> {
    let theta = resolve_theta(&args.model)?;
    let bracket = critical_bracket(&theta, args.tol)?;
    if let Some(path) = &args.grid_csv {
        let mut w =
            csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
        for &(lambda, verdict) in &bracket.grid {
            w.serialize(GridRow {
                schema_version: SCHEMA_VERSION,
                lambda,
                verdict,
            })?;
        }
        w.flush()?;
    }
    emit(out, args, Some(&theta), bracket)
}

#[derive(Serialize)]
struct PerturbOutput {
    direction: PerturbationReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    slopes: Option<SlopesOutput>,
}

#[derive(Serialize)]
struct SlopesOutput {
    #[serde(flatten)]
    values: SlopeReport,
    x_c_rel_error: f64,
    gap_rel_error: f64,
}

#[derive(Serialize)]
struct ScanRow {
    schema_version: u32,
    h: f64,
    verdict: Verdict,
    stage: &'static str,
}

pub fn perturb(args: &PerturbArgs, out: &mut Out) -> Result<()> {
    if args.scan_e0 {
        let pattern = e0_pattern(args.delta, args.h_max)?;
        let mut w = csv_sink(args.output.as_deref(), out)?;
        let stages = pattern
            .small
            .iter()
            .map(|r| (r, "small"))
            .chain(pattern.doubling.iter().map(|r| (r, "doubling")));
        for (&(h, verdict), stage) in stages {
            w.serialize(ScanRow {
                schema_version: SCHEMA_VERSION,
                h,
                verdict,
                stage,
            })?;
        }
        w.flush()?;
        return Ok(());
    }
    let c: Vec<f64> = match &args.c {
        Some(text) => serde_json::from_str(text).context("parsing --c")?,
        None => {
            let mut e0 = vec![0.0; args.delta + 1];
            e0[0] = 1.0;
            e0
        }
    };
    let direction = classify_direction(args.delta, &c)?;
    let slopes = if args.slopes {
        let values = slope_report(args.delta, &c)?;
        Some(SlopesOutput {
            x_c_rel_error: values.x_c_rel_error(),
            gap_rel_error: values.gap_rel_error(),
            values,
        })
    } else {
        None
    };
    let report = PerturbOutput { direction, slopes };
    match &args.output {
        Some(path) => emit(&mut fs::File::create(path)?, args, None, report),
        None => emit(out, args, None, report),
    }
}

#[derive(Serialize)]
struct TreeOracle {
    depth: usize,
    boundary: Boundary,
    z00: f64,
    z01: f64,
    z10: f64,
    zeta_dp: f64,
    zeta_recursion: Option<f64>,
    root_law: Vec<f64>,
    root_included: f64,
    /// Same law by enumerating the tree, when it is small enough.
    root_law_enumerated: Option<(Vec<f64>, f64)>,
}

#[derive(Serialize)]
struct GraphOracle {
    n: usize,
    edges: usize,
    z: f64,
    log_z: f64,
    neighbor_law: NeighborDistribution,
    inclusion: f64,
}

#[derive(Serialize)]
struct OracleOutput {
    tree: TreeOracle,
    #[serde(skip_serializing_if = "Option::is_none")]
    graph: Option<GraphOracle>,
}

pub fn oracle(args: &OracleArgs, out: &mut Out) -> Result<()> {
    let theta = resolve_theta(&args.model)?;
    let model = ModelSpec::new(theta.clone(), args.lambda)?;
    let boundary = Boundary::from(args.boundary);
    let d = args.depth;
    let dp = dp_partition(&model, d, boundary)?;
    let (root_law, root_included) = conditional_pk(&model, d, boundary)?;
    let zeta_recursion = if d >= 3 {
        Some(boundary_seq(&model, boundary, d)?[d - 2])
    } else {
        None
    };
    let tree = TreeOracle {
        depth: d,
        boundary,
        z00: dp.z00,
        z01: dp.z01,
        z10: dp.z10,
        zeta_dp: zeta_from_dp(&model, d, boundary)?,
        zeta_recursion,
        root_law,
        root_included,
        root_law_enumerated: conditional_pk_by_enumeration(
            &Potentials::from_model(&model),
            d,
            boundary,
        )
        .ok()
        .map(|m| masses_to_f64(&m)),
    };
    let graph = match &args.graph {
        Some(path) => {
            let g = FiniteGraph::parse_edge_list(&fs::read_to_string(path)?)?;
            let wc = enumerate_z(&model, &g)?;
            let (neighbor_law, inclusion) = small_graph_neighbor_law(&model, &g)?;
            Some(GraphOracle {
                n: g.n(),
                edges: g.edges().len(),
                z: wc.z,
                log_z: wc.log_z,
                neighbor_law,
                inclusion,
            })
        }
        None => None,
    };
    emit(out, args, Some(&theta), OracleOutput { tree, graph })
}

#[derive(Serialize)]
struct McmcOutput {
    girth: Option<usize>,
    estimate: NeighborEstimate,
    fit: MuFit,
    verdict: Verdict,
    predicted: Option<NeighborDistribution>,
    /// Distance to the tree prediction; an empirical figure, not a pass mark.
    tv_to_prediction: Option<f64>,
}

pub fn mcmc(args: &McmcArgs, out: &mut Out) -> Result<()> {
    let theta = resolve_theta(&args.model)?;
    let model = ModelSpec::new(theta.clone(), args.lambda)?;
    let graph = gen_random_regular(args.n, theta.delta(), args.seed, args.min_girth)?;
    let config = SamplerConfig {
        sweeps: args.sweeps,
        burn_in: args.burnin,
        chains: args.chains,
        seed: args.seed,
        thin: args.thin,
    };
    let estimate = estimate_neighbor_law(&model, &graph, &config)?;
    let predicted = limit_probabilities(&model)
        .and_then(|l| l.neighbor_law())
        .ok();
    let tv_to_prediction = predicted
        .as_ref()
        .map(|p| estimate.law.tv_distance(p))
        .transpose()?;
    if let Some(path) = &args.samples_csv {
        write_samples(&model, &graph, &config, path)?;
    }
    let report = McmcOutput {
        girth: graph.girth(),
        fit: fit_mu_shape(&estimate.law, &theta)?,
        verdict: classify_uniqueness(&model).verdict,
        estimate,
        predicted,
        tv_to_prediction,
    };
    emit(out, args, Some(&theta), report)
}

/// Reruns the chains sequentially and records every retained sample: the
/// inclusion density and, for each `k`, how many excluded nodes have `k`
/// included neighbours.
fn write_samples(
    model: &ModelSpec,
    graph: &RegularGraph,
    config: &SamplerConfig,
    path: &Path,
) -> Result<()> {
    let delta = graph.delta();
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    let mut header = vec![
        "schema_version".to_string(),
        "chain".into(),
        "sweep".into(),
        "inclusion".into(),
    ];
    header.extend((0..=delta).map(|k| format!("excluded_with_{k}")));
    w.write_record(&header)?;
    let weights = FlipWeights::new(model);
    for chain in 0..config.chains {
        let mut state = ChainState::new(graph, config.seed, chain as u64);
        for sweep in 1..=config.sweeps {
            heat_bath_sweep(&weights, graph, &mut state);
            if sweep <= config.burn_in || !(sweep - config.burn_in).is_multiple_of(config.thin) {
                continue;
            }
            let mut hist = vec![0usize; delta + 1];
            let mut included = 0usize;
            for v in 0..graph.n() {
                if state.occupied[v] {
                    included += 1;
                } else {
                    hist[state.counts[v]] += 1;
                }
            }
            let mut rec = vec![
                SCHEMA_VERSION.to_string(),
                chain.to_string(),
                sweep.to_string(),
                (included as f64 / graph.n() as f64).to_string(),
            ];
            rec.extend(hist.iter().map(|h| h.to_string()));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Runs the checks, one JSON line each, and returns whether all passed.
pub fn verify_with(ctx: &Context, args: &VerifyArgs, out: &mut Out) -> Result<bool> {
    let mut io_error = None;
    let results = run_checks(ctx, args.only.as_deref(), |r| {
        if let Err(e) = serde_json::to_writer(&mut *out, r)
            .map_err(anyhow::Error::from)
            .and_then(|_| {
                writeln!(out)?;
                out.flush()?;
                Ok(())
            })
        {
            io_error.get_or_insert(e);
        }
    })
    .map_err(|e| anyhow!(e))?;
    if let Some(e) = io_error {
        return Err(e);
    }
    let failed: Vec<&str> = results
        .iter()
        .filter(|r| !r.pass)
        .map(|r| r.check.as_str())
        .collect();
    if !failed.is_empty() {
        eprintln!("failed checks: {}", failed.join(", "));
    }
    Ok(failed.is_empty())
}

pub fn verify(args: &VerifyArgs, out: &mut Out) -> Result<bool> {
    let mut ctx = Context::default();
    if let Some(seed) = args.seed {
        ctx.seed = seed;
    }
    verify_with(&ctx, args, out)
}
