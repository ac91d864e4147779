//! Built-in reproduction checks behind `vbpg paper-checks`.
//!
//! Each check writes its artifacts under its own subdirectory of the output
//! directory and reports a one-line detail. Failures inside a check (solver
//! errors included) mark the check as failed instead of aborting the run.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{array, Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use vbpg_core::bregman::{check_generalized_descent, check_gap_bounds, solve_subproblem, BregmanKernel, BregmanStep};
use vbpg_core::corpus::{load_corpus, COMPOSITE_DEFAULTS};
use vbpg_core::diagnostics::{
    audit_implications, check_contraction_converse, check_subregularity_prediction, check_sufficient_conditions,
    check_value_proximity, default_oracle, entry_step, measure_levelset_contraction, powers_of_two,
    scan_counterexample, ContractionOptions, LocalCondition, Region, Sampler, ScanReport, SublevelOracle,
};
use vbpg_core::linalg;
use vbpg_core::problem::{
    soft_threshold, validate_problem, AnalyticOracles, CompositeProblem, CriticalSet, Quadratic, Zero, L1,
};
use vbpg_core::solver::{measure_rates, run_regularized_jacobi, run_vbpg, EpsSchedule, KernelSchedule, VbpgConfig};
use vbpg_core::Problem;

use crate::commands::cmd_run;
use crate::error::{CliError, CliResult};
use crate::output::{prepare_dir, scan_csv, write_atomic, write_json};

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub id: String,
    pub title: String,
    pub passed: bool,
    pub detail: String,
    /// Paths relative to the output directory.
    pub artifacts: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<CheckOutcome>,
}

impl Manifest {
    pub fn failing(&self) -> Vec<String> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.id.clone()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct CheckContext {
    pub out: PathBuf,
    pub seed: u64,
}

impl CheckContext {
    pub fn new(out: impl Into<PathBuf>, seed: u64) -> Self {
        Self { out: out.into(), seed }
    }

    fn dir(&self, sub: &str) -> CliResult<PathBuf> {
        prepare_dir(&self.out.join(sub))
    }

    fn rng(&self, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15))
    }
}

struct Found {
    passed: bool,
    detail: String,
    artifacts: Vec<String>,
}

impl Found {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self {
            passed,
            detail: detail.into(),
            artifacts: Vec::new(),
        }
    }

    fn with(mut self, artifacts: Vec<String>) -> Self {
        self.artifacts = artifacts;
        self
    }
}

type CheckFn = fn(&CheckContext) -> CliResult<Found>;

/// The reproduction criteria, in order.
const CRITERIA: [(&str, &str, CheckFn); 12] = [
    ("descent", "sufficient decrease on every composite corpus problem", descent),
    ("generalized_descent", "generalized descent and cost-to-go inequalities", generalized_descent),
    ("gap_tightness", "gap bounds are tight for a scalar quadratic", gap_tightness),
    ("closed_form_rate", "closed-form Q-rate and level-set contraction", closed_form_rate),
    ("subproblem_oracles", "subproblem solver against independent minimizers", subproblem_oracles),
    ("counterexample_scans", "counterexample ratio scans", counterexample_scans),
    ("implication_audit", "implication chain between error bounds", implication_audit),
    ("contraction_converse", "measured contraction implies a strong level-set bound", contraction_converse),
    ("jacobi_equivalence", "regularized Jacobi equals VBPG with a block kernel", jacobi_equivalence),
    ("weak_convexity", "local weak convexity predicts weak metric subregularity", weak_convexity),
    ("value_proximity", "envelope value is quadratic in the sublevel distance", value_proximity),
    ("determinism", "runs are reproducible from the seed", determinism),
];

fn rel(ctx: &CheckContext, path: &Path) -> String {
    path.strip_prefix(&ctx.out).unwrap_or(path).display().to_string()
}

fn file_stem(id: &str) -> String {
    id.to_lowercase()
}

fn euclidean_config(eps: f64, iters: usize) -> CliResult<VbpgConfig<f64>> {
    Ok(VbpgConfig::new(KernelSchedule::Constant(BregmanKernel::euclidean()), EpsSchedule::constant(eps)?).max_iters(iters))
}

/// Corpus audit run ahead of the criteria: declared Lipschitz constants,
/// descent lemma and semiconvexity on random pairs.
pub fn validate_corpus(seed: u64) -> CheckOutcome {
    let result: CliResult<Found> = (|| {
        let mut bad = Vec::new();
        for id in COMPOSITE_DEFAULTS {
            let entry = load_corpus(id)?;
            let report = validate_problem(entry.composite()?, &entry.working_box, 500, seed)?;
            if !report.passed() {
                bad.push(format!("{id}: {} violations", report.violations.len()));
            }
        }
        Ok(if bad.is_empty() {
            Found::new(true, format!("{} problems audited on 500 pairs each", COMPOSITE_DEFAULTS.len()))
        } else {
            Found::new(false, bad.join("; "))
        })
    })();
    finish("validate_problem", "declared constants of the corpus", result)
}

fn finish(id: &str, title: &str, result: CliResult<Found>) -> CheckOutcome {
    let found = result.unwrap_or_else(|e| Found::new(false, format!("error: {e}")));
    CheckOutcome {
        id: id.into(),
        title: title.into(),
        passed: found.passed,
        detail: found.detail,
        artifacts: found.artifacts,
    }
}

/// Number of reproduction criteria.
pub const CRITERIA_COUNT: usize = CRITERIA.len();

/// Identifier and title of criterion `index` (1-based).
pub fn criterion(index: usize) -> (&'static str, &'static str) {
    let (id, title, _) = CRITERIA[index - 1];
    (id, title)
}

/// Runs criterion `index` (1-based).
pub fn run_check(index: usize, ctx: &CheckContext) -> CheckOutcome {
    let (id, title, f) = CRITERIA[index - 1];
    log::info!("check {index}: {title}");
    finish(id, title, f(ctx))
}

/// Runs the corpus audit and every criterion, then writes `manifest.json`.
pub fn run_all(ctx: &CheckContext) -> CliResult<Manifest> {
    prepare_dir(&ctx.out)?;
    let mut checks = vec![validate_corpus(ctx.seed)];
    checks.extend((1..=CRITERIA_COUNT).into_par_iter().map(|i| run_check(i, ctx)).collect::<Vec<_>>());
    let manifest = Manifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        seed: ctx.seed,
        passed: checks.iter().all(|c| c.passed),
        checks,
    };
    write_json(&ctx.out.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

fn descent(ctx: &CheckContext) -> CliResult<Found> {
    let dir = ctx.dir("descent")?;
    let mut artifacts = Vec::new();
    let mut lines = Vec::new();
    let mut total = 0;
    for (pi, id) in COMPOSITE_DEFAULTS.iter().enumerate() {
        let entry = load_corpus(id)?;
        let p = entry.composite()?;
        let cfg = euclidean_config(entry.eps.expect("composite entries carry a step"), 200)?;
        let mut rng = ctx.rng(pi as u64);
        let mut violations = 0;
        for start in 0..5 {
            let x0 = entry.working_box.sample(&mut rng);
            let trace = run_vbpg(p, &cfg, x0.view())?;
            violations += trace.descent_violations().len();
            if start == 0 {
                let path = dir.join(format!("{}.csv", file_stem(id)));
                write_atomic(&path, &crate::output::trace_csv(&trace))?;
                artifacts.push(rel(ctx, &path));
            }
        }
        total += violations;
        lines.push(format!("{id}: {violations}"));
    }
    Ok(Found::new(total == 0, format!("descent violations over 5 starts: {}", lines.join(", "))).with(artifacts))
}

fn generalized_descent(ctx: &CheckContext) -> CliResult<Found> {
    let mut worst = f64::INFINITY;
    let mut failures = Vec::new();
    for (pi, id) in COMPOSITE_DEFAULTS.iter().enumerate() {
        let entry = load_corpus(id)?;
        let p = entry.composite()?;
        let step = entry_step(&entry)?;
        let mut rng = ctx.rng(100 + pi as u64);
        let mut bad = 0;
        for _ in 0..200 {
            let x = entry.working_box.sample(&mut rng);
            let u = entry.working_box.sample(&mut rng);
            let sol = solve_subproblem(p, &step, x.view(), None)?;
            let report = check_generalized_descent(p, &step, x.view(), u.view(), &sol)?;
            worst = worst.min(report.min_slack());
            bad += usize::from(!report.passed());
        }
        if bad > 0 {
            failures.push(format!("{id}: {bad}/200"));
        }
    }
    Ok(if failures.is_empty() {
        Found::new(true, format!("200 pairs per problem, smallest slack {worst:.3e}"))
    } else {
        Found::new(false, format!("violated on {}", failures.join(", ")))
    })
}

fn half_square() -> Problem {
    CompositeProblem::new(Quadratic::diagonal(array![1.0], array![0.0]).expect("valid quadratic"), Zero).with_oracles(
        AnalyticOracles {
            critical_points: Some(CriticalSet::single(array![0.0])),
            solution_set: Some(CriticalSet::single(array![0.0])),
            optimal_value: Some(0.0),
            ..AnalyticOracles::default()
        },
    )
}

fn gap_tightness(ctx: &CheckContext) -> CliResult<Found> {
    let p = half_square();
    let step = BregmanStep::new(BregmanKernel::euclidean(), 0.5)?;
    let x = array![2.0];
    let sol = solve_subproblem(&p, &step, x.view(), None)?;
    let report = check_gap_bounds(&p, &step, x.view(), &sol, None)?;
    let path = ctx.dir("gap_tightness")?.join("report.json");
    write_json(&path, &report)?;
    let gaps: Vec<f64> = report.checks[..3].iter().map(|c| (c.rhs - c.lhs).abs()).collect();
    let tight = gaps.iter().all(|&g| g <= 1e-10);
    Ok(Found::new(
        tight && report.passed(),
        format!("|rhs - lhs| = {gaps:?}, all checks hold: {}", report.passed()),
    )
    .with(vec![rel(ctx, &path)]))
}

fn closed_form_rate(ctx: &CheckContext) -> CliResult<Found> {
    let p = half_square();
    let cfg = euclidean_config(0.5, 40)?.stop_tol(f64::MIN_POSITIVE);
    let x0 = array![2.0];
    let trace = run_vbpg(&p, &cfg, x0.view())?;
    let rates = measure_rates(&trace, 0.0, array![0.0].view(), 1.0)?;
    let contraction = measure_levelset_contraction(
        &p,
        &euclidean_config(0.5, 30)?,
        x0.view(),
        0.0,
        &SublevelOracle::SolutionSet,
        ContractionOptions {
            theta_prime: None,
            dist_floor: 0.0,
        },
    )?;
    let path = ctx.dir("closed_form_rate")?.join("contraction.json");
    write_json(&path, &contraction)?;
    let rate_ok = (rates.beta_q - 0.25).abs() <= 1e-12;
    let ratio_dev = contraction.ratios.iter().map(|r| (r - 0.5).abs()).fold(0.0, f64::max);
    let ratios_ok = !contraction.ratios.is_empty() && ratio_dev <= 1e-12;
    Ok(Found::new(
        rate_ok && ratios_ok,
        format!(
            "beta_Q = {}, {} contraction ratios within {ratio_dev:.1e} of 0.5",
            rates.beta_q,
            contraction.ratios.len()
        ),
    )
    .with(vec![rel(ctx, &path)]))
}

/// Brute-force minimizer of `⟨v, y⟩ + λ‖y‖₁ + ½(y−x)ᵀQ(y−x)/ε` over a grid of
/// spacing `h` centred at `c` with `half` nodes either side.
#[allow(clippy::too_many_arguments)]
fn grid_argmin(v: [f64; 2], lam: f64, q: [[f64; 2]; 2], eps: f64, x: [f64; 2], c: [f64; 2], h: f64, half: i64) -> ([f64; 2], bool) {
    let phi = |y: [f64; 2]| {
        let d = [y[0] - x[0], y[1] - x[1]];
        let quad = d[0] * (q[0][0] * d[0] + q[0][1] * d[1]) + d[1] * (q[1][0] * d[0] + q[1][1] * d[1]);
        v[0] * y[0] + v[1] * y[1] + lam * (y[0].abs() + y[1].abs()) + 0.5 * quad / eps
    };
    let mut best = (f64::INFINITY, [0.0; 2], (0, 0));
    for i in -half..=half {
        for j in -half..=half {
            let y = [c[0] + i as f64 * h, c[1] + j as f64 * h];
            let val = phi(y);
            if val < best.0 {
                best = (val, y, (i, j));
            }
        }
    }
    let (i, j) = best.2;
    (best.1, i.abs() < half && j.abs() < half)
}

fn subproblem_oracles(ctx: &CheckContext) -> CliResult<Found> {
    // Euclidean kernel with ℓ₁: the step is soft-thresholding of a gradient step.
    let entry = load_corpus("LASSO")?;
    let lasso = entry.composite()?;
    let lam = 0.1;
    let p = CompositeProblem::from_arcs(lasso.f_arc(), std::sync::Arc::new(L1::new(lam)?));
    let mut rng = ctx.rng(500);
    let mut soft_err = 0.0_f64;
    for _ in 0..1000 {
        let x = entry.working_box.sample(&mut rng);
        let eps = rng.random_range(0.05..0.95) / p.lipschitz();
        let step = BregmanStep::new(BregmanKernel::euclidean(), eps)?;
        let t = solve_subproblem(&p, &step, x.view(), None)?.point;
        let g = p.gradient(x.view())?;
        let expected: Array1<f64> = Array1::from_shape_fn(x.len(), |i| soft_threshold(x[i] - eps * g[i], eps * lam));
        soft_err = soft_err.max(linalg::dist(t.view(), expected.view()) / (1.0 + linalg::norm(expected.view())));
    }

    // SPD kernel: compare with a fine grid minimizer of the subproblem.
    let qk = [[2.0, 0.5], [0.5, 1.0]];
    let kernel = BregmanKernel::spd(Array2::from_shape_vec((2, 2), vec![2.0, 0.5, 0.5, 1.0]).expect("2x2"))?;
    let quad = load_corpus("QUAD_SC")?;
    let p2 = CompositeProblem::from_arcs(quad.composite()?.f_arc(), std::sync::Arc::new(L1::new(0.3)?));
    let eps = 0.9 * kernel.m() / p2.lipschitz();
    let step = BregmanStep::new(kernel, eps)?;
    let (h, half) = (1e-4, 500);
    let mut grid_err = 0.0_f64;
    let mut interior = true;
    for _ in 0..3 {
        let x = quad.working_box.sample(&mut rng);
        let t = solve_subproblem(&p2, &step, x.view(), None)?.point;
        let g = p2.gradient(x.view())?;
        // Offset by a fraction of a cell so the solver's point is not a node.
        let c = [t[0] + 0.37 * h, t[1] - 0.61 * h];
        let (y, inside) = grid_argmin([g[0], g[1]], 0.3, qk, eps, [x[0], x[1]], c, h, half);
        interior &= inside;
        grid_err = grid_err.max(((y[0] - t[0]).powi(2) + (y[1] - t[1]).powi(2)).sqrt());
    }
    let diag = h * 2f64.sqrt();
    Ok(Found::new(
        soft_err <= 1e-12 && interior && grid_err <= diag,
        format!(
            "soft-threshold deviation {soft_err:.1e} on 1000 inputs; SPD grid deviation {grid_err:.2e} (cell diagonal {diag:.2e}, interior: {interior})"
        ),
    ))
}

fn scan_row(ctx: &CheckContext, dir: &Path, name: &str, report: &ScanReport) -> CliResult<Vec<String>> {
    let csv = dir.join(format!("{name}.csv"));
    write_atomic(&csv, &scan_csv(&report.rows))?;
    let json = dir.join(format!("{name}.json"));
    write_json(&json, report)?;
    Ok(vec![rel(ctx, &csv), rel(ctx, &json)])
}

fn counterexample_scans(ctx: &CheckContext) -> CliResult<Found> {
    let dir = ctx.dir("counterexample_scans")?;
    let sampler = Sampler::new(1000, ctx.seed);
    let mut artifacts = Vec::new();
    let mut notes = Vec::new();
    let mut ok = true;

    let ex51 = scan_counterexample("EX_5_1", &powers_of_two(4, 20), None, sampler)?;
    artifacts.extend(scan_row(ctx, &dir, "ex_5_1", &ex51)?);
    let at = |r: &ScanReport, n| r.row(n).map_or(f64::NAN, |row| row.ratio);
    let (r16, r256) = (at(&ex51, 16), at(&ex51, 256));
    let ok51 = (r16 - 1.099).abs() <= 1e-3
        && (r256 - 2.061).abs() <= 1e-3
        && ex51.monotone
        && ex51.refuted()
        && ex51.positive.certified();
    ok &= ok51;
    notes.push(format!("EX_5_1 ratio(16) = {r16:.4}, ratio(256) = {r256:.4}, refuted: {}", ex51.refuted()));

    let ex53 = scan_counterexample("EX_5_3", &(2..=50).collect::<Vec<_>>(), None, sampler)?;
    artifacts.extend(scan_row(ctx, &dir, "ex_5_3", &ex53)?);
    let ok53 = ex53.monotone && ex53.factor > 10.0 && ex53.refuted() && ex53.positive.certified();
    ok &= ok53;
    notes.push(format!("EX_5_3 growth factor {:.1}, refuted: {}", ex53.factor, ex53.refuted()));

    for alpha in [0.25, 0.5, 0.9] {
        let r = scan_counterexample("EX_5_2", &powers_of_two(2, 20), Some(alpha), sampler)?;
        artifacts.extend(scan_row(ctx, &dir, &format!("ex_5_2_alpha_{alpha}"), &r)?);
        let dominated = r.rows.iter().all(|row| row.measured.is_none_or(|m| m <= row.ratio * (1.0 + 1e-9)));
        let ok52 = r.monotone && dominated && r.positive.certified() && (alpha != 0.5 || r.refuted());
        ok &= ok52;
        notes.push(format!("EX_5_2 alpha {alpha}: decay factor {:.2}, refuted: {}", r.factor, r.refuted()));
    }
    Ok(Found::new(ok, notes.join("; ")).with(artifacts))
}

fn implication_audit(ctx: &CheckContext) -> CliResult<Found> {
    let dir = ctx.dir("implication_audit")?;
    let mut ok = true;
    let mut notes = Vec::new();
    let mut artifacts = Vec::new();
    for id in ["QUAD_SC", "QUAD_L1"] {
        let entry = load_corpus(id)?;
        let audit = audit_implications(&entry, Sampler::new(1000, ctx.seed))?;
        let path = dir.join(format!("{}.json", file_stem(id)));
        write_json(&path, &audit)?;
        artifacts.push(rel(ctx, &path));
        // The Bregman link is audited at θ + 1e−6; its sampled constant must not exceed it.
        let within = audit.links.iter().all(|l| {
            l.certificate
                .constant_estimate
                .is_none_or(|c| l.certificate.condition.direction() != vbpg_core::diagnostics::Direction::Upper || c <= l.predicted_constant * (1.0 + 1e-9) + 1e-6)
        });
        let failed: Vec<&str> = audit.links.iter().filter(|l| !l.passed()).map(|l| l.name).collect();
        ok &= audit.passed() && within;
        notes.push(format!(
            "{id}: {} links, failing [{}], theta = {:.3}",
            audit.links.len(),
            failed.join(", "),
            audit.theta
        ));
    }
    Ok(Found::new(ok, notes.join("; ")).with(artifacts))
}

fn contraction_converse(ctx: &CheckContext) -> CliResult<Found> {
    let entry = load_corpus("LASSO")?;
    let p = entry.composite()?;
    let f_star = p
        .analytic()
        .optimal_value
        .ok_or_else(|| CliError::Capability(vec!["LASSO optimal value".into()]))?;
    let cfg = euclidean_config(entry.eps.expect("composite entries carry a step"), 300)?;
    let x0 = Array1::from_elem(entry.working_box.dim(), 0.2);
    let oracle = SublevelOracle::SolutionSet;
    let report = measure_levelset_contraction(
        p,
        &cfg,
        x0.view(),
        f_star,
        &oracle,
        ContractionOptions {
            theta_prime: None,
            dist_floor: 1e-9,
        },
    )?;
    let beta = report.beta_hat.unwrap_or(f64::NAN);
    let conv = check_contraction_converse(p, &report, f_star, &oracle, Sampler::new(1000, ctx.seed))?;
    let path = ctx.dir("contraction_converse")?.join("lasso.json");
    write_json(&path, &conv)?;
    Ok(Found::new(
        beta < 1.0 && conv.certificate.certified(),
        format!(
            "beta_hat = {beta:.4}, c1' = {:.3}, sampled constant {:?}",
            conv.c1_prime, conv.certificate.constant_estimate
        ),
    )
    .with(vec![rel(ctx, &path)]))
}

fn jacobi_equivalence(ctx: &CheckContext) -> CliResult<Found> {
    let entry = load_corpus("JACOBI_BLOCK(40,4,7)")?;
    let p = entry.composite()?;
    let layout = entry
        .jacobi
        .clone()
        .ok_or_else(|| CliError::Capability(vec!["block layout".into()]))?;
    let x0 = entry.working_box.sample(&mut ctx.rng(900));
    // Both runners solve their subproblems inexactly; a shared tight inner
    // tolerance keeps that error well below the comparison threshold.
    let inner = 1e-13;
    let jac = run_regularized_jacobi(p, &layout.blocks, &layout.c, layout.eps, x0.view(), 100, Some(inner))?;
    let cfg = VbpgConfig::new(
        KernelSchedule::BlockJacobi {
            blocks: layout.blocks.clone(),
            c: layout.c.clone(),
        },
        EpsSchedule::constant(layout.eps)?,
    )
    .max_iters(100)
    .stop_tol(f64::MIN_POSITIVE)
    .inner_tol(inner);
    let vb = run_vbpg(p, &cfg, x0.view())?;
    let deviation = jac
        .points()
        .zip(vb.points())
        .map(|(a, b)| linalg::dist(a, b))
        .fold(0.0, f64::max);
    let same_len = jac.records.len() == vb.records.len();
    Ok(Found::new(
        same_len && deviation <= 1e-10,
        format!("{} iterations each, largest iterate deviation {deviation:.2e}", vb.records.len()),
    ))
}

fn weak_convexity(ctx: &CheckContext) -> CliResult<Found> {
    let entry = load_corpus("QUAD_MCP")?;
    let p = entry.composite()?;
    let region = &entry.recommended_regions[0];
    let qf = p
        .f()
        .quadratic_form()
        .ok_or_else(|| CliError::Capability(vec!["quadratic form of f".into()]))?;
    let mu_exact = linalg::symmetric_eigenvalues(qf.q.view())?[0];
    let r = check_sufficient_conditions(
        p,
        region.x_bar.view(),
        region.eta,
        LocalCondition::Lwsc,
        None,
        Sampler::new(1000, ctx.seed),
    )?;
    let Some(mu) = r.mu_max else {
        return Ok(Found::new(false, "no admissible modulus"));
    };
    let rho = p.rho().unwrap_or(0.0);
    let pred = check_subregularity_prediction(p, region, mu, rho, Sampler::new(500, ctx.seed.wrapping_add(1000)))?;
    let path = ctx.dir("weak_convexity")?.join("quad_mcp.json");
    write_json(&path, &serde_json::json!({ "modulus": r, "prediction": pred, "mu_exact": mu_exact }))?;
    let rel_err = (mu - mu_exact).abs() / mu_exact;
    Ok(Found::new(
        rel_err <= 0.02 && pred.passed(),
        format!(
            "mu = {mu:.6} vs {mu_exact} ({:.2}% off), predicted constant {:.3}, sampled {:?}",
            100.0 * rel_err,
            pred.predicted_constant,
            pred.certificate.constant_estimate
        ),
    )
    .with(vec![rel(ctx, &path)]))
}

fn value_proximity(ctx: &CheckContext) -> CliResult<Found> {
    let dir = ctx.dir("value_proximity")?;
    let mut ok = true;
    let mut notes = Vec::new();
    let mut artifacts = Vec::new();
    for id in COMPOSITE_DEFAULTS {
        let entry = load_corpus(id)?;
        let p = entry.composite()?;
        let step = entry_step(&entry)?;
        let region = entry
            .recommended_regions
            .last()
            .ok_or_else(|| CliError::Capability(vec![format!("{id}: recommended region")]))?;
        let f_star = p
            .analytic()
            .optimal_value
            .ok_or_else(|| CliError::Capability(vec![format!("{id}: optimal value")]))?;
        let band = Region::with_level(region.x_bar.clone(), region.eta, region.nu, f_star)?;
        let r = check_value_proximity(p, &step, &band, &default_oracle(p), Sampler::new(1000, ctx.seed))?;
        let path = dir.join(format!("{}.json", file_stem(id)));
        write_json(&path, &r)?;
        artifacts.push(rel(ctx, &path));
        ok &= r.passed();
        notes.push(format!("{id}: worst {:.3} vs c0 {:.3}", r.worst_ratio, r.c0));
    }
    Ok(Found::new(ok, notes.join("; ")).with(artifacts))
}

fn determinism(ctx: &CheckContext) -> CliResult<Found> {
    let dir = ctx.dir("determinism")?;
    let config = dir.join("config.json");
    let text = format!(
        "{{\"problem\": {{\"corpus\": \"QUAD_L1\"}}, \"max_iters\": 100, \"seed\": {}}}\n",
        ctx.seed
    );
    write_atomic(&config, text.as_bytes())?;
    let (a, b) = (dir.join("run_a"), dir.join("run_b"));
    cmd_run(&config, &a, None)?;
    cmd_run(&config, &b, None)?;
    let read = |d: &Path| fs::read(d.join("trace.csv")).map_err(|e| CliError::output(d, e));
    let (ta, tb) = (read(&a)?, read(&b)?);
    let same = !ta.is_empty() && ta == tb;
    Ok(Found::new(same, format!("two runs, {} trace bytes each, identical: {same}", ta.len()))
        .with(vec![rel(ctx, &a.join("trace.csv")), rel(ctx, &b.join("trace.csv"))]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use vbpg_core::problem::BoxDomain;

    #[test]
    fn understated_lipschitz_constant_fails_validation() {
        let f = Quadratic::with_lipschitz(Array2::from_diag(&array![1.0, 10.0]), array![0.0, 0.0], 2.0).unwrap();
        let p = CompositeProblem::new(f, Zero);
        let bx = BoxDomain::uniform(2, -1.0, 1.0).unwrap();
        assert!(!validate_problem(&p, &bx, 200, 0).unwrap().passed());
    }

    #[test]
    fn grid_argmin_finds_an_interior_quadratic_minimum() {
        let q = [[1.0, 0.0], [0.0, 1.0]];
        let (y, inside) = grid_argmin([0.0, 0.0], 0.0, q, 1.0, [0.3, -0.2], [0.3, -0.2], 1e-2, 10);
        assert!(inside);
        assert!((y[0] - 0.3).abs() < 1e-12 && (y[1] + 0.2).abs() < 1e-12);
    }

    #[test]
    fn gap_bounds_are_tight() {
        let dir = tempfile::tempdir().unwrap();
        let found = gap_tightness(&CheckContext::new(dir.path(), 0)).unwrap();
        assert!(found.passed, "{}", found.detail);
    }
}
