use std::path::Path;

use ndarray::Array1;
use rayon::prelude::*;
use serde::Serialize;
use vbpg_core::corpus::ex53_prox_reference;
use vbpg_core::diagnostics::{
    certify_bp_gap, certify_bregman_prox_eb, certify_kl, certify_level_set_bregman_eb, certify_level_set_subdiff_eb,
    certify_luo_tseng, certify_prox_pl, certify_strong_ls_bregman_eb, certify_strong_ls_subdiff_eb,
    certify_weak_metric_subreg, default_oracle, BregmanProx, Condition, Counterexample, EBCertificate, GridSublevel,
    ProxFn, ProxMap, SampleSource, SublevelOracle,
};
use vbpg_core::problem::{BoxDomain, SolverConstants};
use vbpg_core::solver::{run_vbpg, StopReason};
use vbpg_core::{Point, Trace};

use crate::config::{CertRequest, Experiment, ExperimentConfig, OracleSpec, SequenceSpec};
use crate::error::{CliError, CliResult};
use crate::output::{prepare_dir, trace_csv, write_atomic, write_json};

/// Run summary written next to the trace; deliberately free of timestamps so
/// that reruns with the same seed are byte-identical.
#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub problem: String,
    pub seed: u64,
    pub x0: Vec<f64>,
    pub iterations: usize,
    pub final_point: Vec<f64>,
    pub f_limit: f64,
    pub stop_reason: StopReason,
    pub constants: SolverConstants<f64>,
    pub descent_violations: Vec<usize>,
}

fn problem_label(exp: &Experiment) -> String {
    match exp.target.entry() {
        Some(e) => e.id.clone(),
        None => "inline".into(),
    }
}

fn load(config: &Path, seed: Option<u64>) -> CliResult<Experiment> {
    ExperimentConfig::from_path(config)?.with_seed(seed).resolve()
}

/// Runs the solver of an experiment and returns the trace.
pub fn solve(exp: &Experiment) -> CliResult<Trace> {
    let problem = exp.target.composite()?;
    let (Some(cfg), Some(x0)) = (&exp.solver, &exp.x0) else {
        return Err(CliError::Config("this problem supports diagnostics only".into()));
    };
    Ok(run_vbpg(problem, cfg, x0.view())?)
}

/// `vbpg run`: writes `trace.csv` and `summary.json` into `out`.
pub fn cmd_run(config: &Path, out: &Path, seed: Option<u64>) -> CliResult<RunSummary> {
    let exp = load(config, seed)?;
    prepare_dir(out)?;
    let trace = solve(&exp)?;
    write_atomic(&out.join("trace.csv"), &trace_csv(&trace))?;
    let summary = RunSummary {
        problem: problem_label(&exp),
        seed: exp.config.seed,
        x0: exp.x0.as_ref().map(|x| x.to_vec()).unwrap_or_default(),
        iterations: trace.summary.iterations,
        final_point: trace.summary.final_point.to_vec(),
        f_limit: trace.summary.f_limit,
        stop_reason: trace.summary.stop_reason,
        constants: trace.summary.constants,
        descent_violations: trace.descent_violations(),
    };
    write_json(&out.join("summary.json"), &summary)?;
    log::info!(
        "{}: {} iterations, F = {}, {} descent violations",
        summary.problem,
        summary.iterations,
        summary.f_limit,
        summary.descent_violations.len()
    );
    Ok(summary)
}

fn witness_sequence(exp: &Experiment, spec: &SequenceSpec) -> CliResult<SampleSource<f64>> {
    let obj = exp.target.objective();
    let points: Vec<Point> = match (&spec.points, &spec.witness) {
        (Some(points), None) => {
            if let Some(p) = points.iter().find(|p| p.len() != obj.dim()) {
                return Err(CliError::Config(format!("sequence point has dimension {}, expected {}", p.len(), obj.dim())));
            }
            points.iter().map(|p| Array1::from_vec(p.clone())).collect()
        }
        (None, Some(id)) => {
            let ex = Counterexample::parse(id).map_err(|e| CliError::Config(e.to_string()))?;
            let ns = spec.n.clone().unwrap_or_else(|| (ex.first_n()..=200).collect());
            if let Some(n) = ns.iter().find(|&&n| n < ex.first_n()) {
                return Err(CliError::Config(format!("{} starts at n = {}, got {n}", ex.id(), ex.first_n())));
            }
            let points: Vec<Point> = ns.iter().map(|&n| ex.point(n)).collect();
            if points[0].len() != obj.dim() {
                return Err(CliError::Config(format!("witness {} does not fit this problem", ex.id())));
            }
            points
        }
        _ => return Err(CliError::Config("a sequence needs exactly one of `points` and `witness`".into())),
    };
    if points.is_empty() {
        return Err(CliError::Config("empty sequence".into()));
    }
    let f_bar = match spec.f_bar {
        Some(v) => v,
        None => obj.objective(Array1::zeros(obj.dim()).view())?,
    };
    Ok(SampleSource::Sequence { points, f_bar })
}

fn source(exp: &Experiment, req: &CertRequest, index: usize) -> CliResult<SampleSource<f64>> {
    match (&req.sequence, &req.region) {
        (Some(_), Some(_)) => Err(CliError::Config("give either `region` or `sequence`, not both".into())),
        (Some(seq), None) => witness_sequence(exp, seq),
        (None, region) => Ok(SampleSource::region(exp.region(region.as_ref())?, exp.sampler(req, index))),
    }
}

fn oracle(exp: &Experiment, req: &CertRequest, f_bar: f64) -> CliResult<SublevelOracle<f64>> {
    let obj = exp.target.objective();
    Ok(match &req.oracle {
        None => default_oracle(obj),
        Some(OracleSpec::Analytic) => {
            if obj.oracles().sublevel_project.is_none() {
                return Err(CliError::Capability(vec!["analytic sublevel projection".into()]));
            }
            SublevelOracle::AnalyticProjection
        }
        Some(OracleSpec::SolutionSet) => SublevelOracle::SolutionSet,
        Some(OracleSpec::Grid { h }) => {
            let bx = match exp.target.entry() {
                Some(e) => e.working_box.clone(),
                None => {
                    let r = exp.region(req.region.as_ref())?;
                    BoxDomain::around(r.x_bar.view(), r.eta)?
                }
            };
            SublevelOracle::Grid(GridSublevel::new(obj, &bx, *h, f_bar)?)
        }
    })
}

fn prox<'a>(exp: &'a Experiment) -> CliResult<Box<dyn ProxMap<f64> + 'a>> {
    match (exp.target.composite(), &exp.step) {
        (Ok(problem), Some(step)) => Ok(Box::new(BregmanProx {
            problem,
            step: step.clone(),
            inner_tol: None,
        })),
        _ => match exp.target.entry() {
            Some(e) if e.id == "EX_5_3" => Ok(Box::new(ProxFn(ex53_prox_reference))),
            _ => Err(CliError::Capability(vec![format!("proximal mapping for {}", problem_label(exp))])),
        },
    }
}

fn need(v: Option<f64>, name: &str) -> CliResult<f64> {
    v.ok_or_else(|| CliError::Config(format!("this condition needs `{name}`")))
}

/// Evaluates one diagnostic request.
pub fn certify_request(exp: &Experiment, req: &CertRequest, index: usize) -> CliResult<EBCertificate> {
    let obj = exp.target.objective();
    let src = source(exp, req, index)?;
    let cand = req.candidate;
    let cert = match req.condition {
        Condition::LevelSetSubdiff => {
            let o = oracle(exp, req, src.f_bar())?;
            certify_level_set_subdiff_eb(obj, &src, req.exponent.unwrap_or(1.0), &o, cand)?
        }
        Condition::LevelSetBregman => {
            let o = oracle(exp, req, src.f_bar())?;
            certify_level_set_bregman_eb(obj, prox(exp)?.as_ref(), &src, req.exponent.unwrap_or(1.0), &o, cand)?
        }
        Condition::StrongLsSubdiff => {
            let o = oracle(exp, req, src.f_bar())?;
            certify_strong_ls_subdiff_eb(obj, &src, &o, cand)?
        }
        Condition::StrongLsBregman => {
            let o = oracle(exp, req, src.f_bar())?;
            certify_strong_ls_bregman_eb(obj, prox(exp)?.as_ref(), &src, &o, cand)?
        }
        Condition::WeakMetricSubreg => certify_weak_metric_subreg(obj, &src, cand)?,
        Condition::BregmanProxEb => certify_bregman_prox_eb(obj, prox(exp)?.as_ref(), &src, cand)?,
        Condition::LuoTseng => {
            let (xi, sigma) = (need(req.xi, "xi")?, need(req.sigma, "sigma")?);
            certify_luo_tseng(obj, prox(exp)?.as_ref(), &src, xi, sigma, cand)?
        }
        Condition::Kl => certify_kl(obj, &src, req.exponent.unwrap_or(0.5), cand)?,
        Condition::BpGap => {
            let problem = exp.target.composite()?;
            let step = exp.step.as_ref().expect("composite experiments carry a step");
            certify_bp_gap(problem, step, &src, req.exponent.unwrap_or(1.0), None, cand)?
        }
        Condition::ProxPl => certify_prox_pl(exp.target.composite()?, &src, cand)?,
    };
    Ok(cert)
}

/// `vbpg certify`: one certificate per request under `out/certificates`.
/// A refuted condition is a result, not an error; unmet capabilities are
/// collected and reported together after the others have been written.
pub fn cmd_certify(config: &Path, out: &Path, seed: Option<u64>) -> CliResult<Vec<(String, EBCertificate)>> {
    let exp = load(config, seed)?;
    if exp.config.diagnostics.is_empty() {
        return Err(CliError::Config("no `diagnostics` requested".into()));
    }
    let dir = prepare_dir(&out.join("certificates"))?;
    let results: Vec<(String, CliResult<EBCertificate>)> = exp
        .config
        .diagnostics
        .par_iter()
        .enumerate()
        .map(|(i, req)| (req.label(i), certify_request(&exp, req, i)))
        .collect();

    let mut done = Vec::new();
    let mut missing = Vec::new();
    let mut first_error = None;
    for (label, result) in results {
        match result {
            Ok(cert) => {
                write_json(&dir.join(format!("{label}.json")), &cert)?;
                log::info!("{label}: {:?}, estimate {:?}", cert.verdict, cert.constant_estimate);
                done.push((label, cert));
            }
            Err(CliError::Capability(what)) => missing.extend(what.into_iter().map(|w| format!("{label}: {w}"))),
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    if let Some(e) = first_error {
        return Err(e);
    }
    if !missing.is_empty() {
        return Err(CliError::Capability(missing));
    }
    Ok(done)
}
