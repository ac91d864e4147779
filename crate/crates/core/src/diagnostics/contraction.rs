use ndarray::ArrayView1;
use serde::Serialize;

use super::certificate::EBCertificate;
use super::certify::{certify_strong_ls_subdiff_eb, SampleSource};
use super::region::{Region, Sampler};
use super::sublevel::{sublevel_distance, SublevelOracle};
use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::{CompositeProblem, Objective, SolverConstants};
use crate::solver::{run_vbpg, SolverTrace, VbpgConfig};
use crate::Scalar;

#[derive(Debug, Clone, Copy, Default)]
pub struct ContractionOptions {
    /// Strong level-set Bregman constant to test against the admissible
    /// interval of the contraction bound.
    pub theta_prime: Option<f64>,
    /// Distances at or below this end the series.
    pub dist_floor: f64,
}

/// Whether the theoretical contraction factor `√(𝔟 − 𝔠/θ′²)` applies.
#[derive(Debug, Clone, Serialize)]
pub struct TheoremCheck {
    /// `(√(𝔠/𝔟), √(𝔠/(𝔟−1)))`; `None` when `𝔠 ≤ 0` or `𝔟 ≤ 1`.
    pub interval: Option<(f64, f64)>,
    pub theta_prime: Option<f64>,
    pub applicable: bool,
    pub beta_theory: Option<f64>,
}

impl TheoremCheck {
    pub fn new<S: Scalar>(constants: &SolverConstants<S>, theta_prime: Option<f64>) -> Self {
        let b = constants.frak_b.as_f64();
        let c = constants.frak_c.as_f64();
        let interval = (c > 0.0 && b > 1.0).then(|| ((c / b).sqrt(), (c / (b - 1.0)).sqrt()));
        let applicable = matches!((interval, theta_prime), (Some((lo, hi)), Some(t)) if t > lo && t < hi);
        let beta_theory = applicable.then(|| {
            let t = theta_prime.expect("applicable implies theta");
            (b - c / (t * t)).sqrt()
        });
        Self {
            interval,
            theta_prime,
            applicable,
            beta_theory,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ContractionReport {
    /// `dist(x^k, [F≤F̄])` for the retained iterates.
    pub distances: Vec<f64>,
    /// `dist(x^{k+1}, ·)/dist(x^k, ·)`.
    pub ratios: Vec<f64>,
    /// Largest observed ratio; `None` for an empty series.
    pub beta_hat: Option<f64>,
    pub theorem: TheoremCheck,
    #[serde(skip)]
    pub trace: Option<SolverTrace<f64>>,
}

/// Runs VBPG from `x0` and measures the per-step contraction of the distance
/// to `[F ≤ F̄]`. The series is empty when `x0` is already in the sublevel
/// set and stops at the first distance at or below the floor.
pub fn measure_levelset_contraction<S: Scalar>(
    p: &CompositeProblem<S>,
    cfg: &VbpgConfig<S>,
    x0: ArrayView1<S>,
    f_bar: S,
    oracle: &SublevelOracle<S>,
    opts: ContractionOptions,
) -> Result<ContractionReport> {
    let trace = run_vbpg(p, cfg, x0)?;
    let theorem = TheoremCheck::new(&trace.summary.constants, opts.theta_prime);
    let mut distances = Vec::new();
    for x in trace.points() {
        let d = sublevel_distance(p, x, f_bar, oracle)?.as_f64();
        distances.push(d);
        if d <= opts.dist_floor {
            break;
        }
    }
    if distances.first().is_some_and(|&d| d <= opts.dist_floor) {
        distances.clear();
    }
    let ratios: Vec<f64> = distances.windows(2).map(|w| w[1] / w[0]).collect();
    let beta_hat = ratios.iter().copied().reduce(f64::max);
    Ok(ContractionReport {
        distances,
        ratios,
        beta_hat,
        theorem,
        trace: Some(to_f64_trace(trace)),
    })
}

fn to_f64_trace<S: Scalar>(t: SolverTrace<S>) -> SolverTrace<f64> {
    use crate::solver::{IterationRecord, TraceSummary};
    let c = t.summary.constants;
    let conv = |v: S| v.as_f64();
    SolverTrace {
        records: t
            .records
            .into_iter()
            .map(|r| IterationRecord {
                k: r.k,
                x: r.x.mapv(conv),
                f_value: conv(r.f_value),
                step_norm: conv(r.step_norm),
                gap: r.gap.map(conv),
                envelope: r.envelope.map(conv),
                residual_bound: conv(r.residual_bound),
                eps: conv(r.eps),
            })
            .collect(),
        summary: TraceSummary {
            iterations: t.summary.iterations,
            final_point: t.summary.final_point.mapv(conv),
            f_limit: conv(t.summary.f_limit),
            stop_reason: t.summary.stop_reason,
            constants: SolverConstants {
                m: conv(c.m),
                big_m: conv(c.big_m),
                eps_lo: conv(c.eps_lo),
                eps_hi: conv(c.eps_hi),
                lipschitz: conv(c.lipschitz),
                rho: c.rho.map(conv),
                a: conv(c.a),
                frak_a: conv(c.frak_a),
                frak_b: conv(c.frak_b),
                frak_c: conv(c.frak_c),
                kappa: conv(c.kappa),
                c0: conv(c.c0),
                regime: c.regime,
            },
        },
    }
}

/// Strong level-set constant implied by a measured contraction factor:
/// `c₁′ = ε̄/((1−β)(m−ε̄ρ))·√(ε̄/ε̲)`.
pub fn converse_constant<S: Scalar>(constants: &SolverConstants<S>, beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Hypothesis(format!("contraction factor must lie in (0, 1), got {beta}")));
    }
    let margin = constants.semiconvex_margin()?.as_f64();
    let (lo, hi) = (constants.eps_lo.as_f64(), constants.eps_hi.as_f64());
    Ok(hi / ((1.0 - beta) * margin) * (hi / lo).sqrt())
}

/// Outcome of the converse check: the constant derived from `β̂` and the
/// strong level-set certificate tested against it.
#[derive(Debug, Clone, Serialize)]
pub struct ConverseReport {
    pub beta_hat: f64,
    pub c1_prime: f64,
    /// `1 + c₁′(L + M/ε̲)`.
    pub theta_prime: f64,
    pub certificate: EBCertificate,
}

/// Samples the band `[F̄ < F < F(x⁰)]` inside the smallest ball around the
/// final iterate containing every visited iterate, and checks the strong
/// level-set subdifferential bound with the constant implied by `β̂`.
pub fn check_contraction_converse<S: Scalar>(
    p: &CompositeProblem<S>,
    report: &ContractionReport,
    f_bar: S,
    oracle: &SublevelOracle<S>,
    sampler: Sampler,
) -> Result<ConverseReport> {
    let trace = report
        .trace
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("contraction report carries no trace".into()))?;
    let beta_hat = report
        .beta_hat
        .ok_or_else(|| Error::InvalidArgument("empty contraction series".into()))?;
    let constants = &trace.summary.constants;
    let c1_prime = converse_constant(constants, beta_hat)?;
    let theta_prime = 1.0 + c1_prime * constants.residual_factor();
    let center = trace.summary.final_point.mapv(S::lit);
    let radius = trace
        .points()
        .map(|x| linalg::dist(x, trace.summary.final_point.view()))
        .fold(0.0, f64::max);
    let nu = S::lit(trace.records.first().map_or(0.0, |r| r.f_value)) - f_bar;
    let region = Region::with_level(center, S::lit(radius), nu, f_bar)?;
    let source = SampleSource::region(region, sampler);
    let certificate = certify_strong_ls_subdiff_eb(p as &dyn Objective<S>, &source, oracle, Some(c1_prime))?;
    Ok(ConverseReport {
        beta_hat,
        c1_prime,
        theta_prime,
        certificate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bregman::BregmanKernel;
    use crate::problem::{derive_constants, CriticalSet, Quadratic, Zero};
    use crate::solver::{EpsSchedule, KernelSchedule};
    use ndarray::{array, Array1};

    fn half_sq() -> CompositeProblem<f64> {
        let mut p = CompositeProblem::new(Quadratic::diagonal(array![1.0], array![0.0]).unwrap(), Zero);
        let a = p.analytic_mut();
        a.solution_set = Some(CriticalSet::single(Array1::zeros(1)));
        a.critical_points = a.solution_set.clone();
        a.optimal_value = Some(0.0);
        p
    }

    fn cfg(eps: f64) -> VbpgConfig<f64> {
        VbpgConfig::new(KernelSchedule::Constant(BregmanKernel::euclidean()), EpsSchedule::constant(eps).unwrap())
            .max_iters(60)
    }

    #[test]
    fn halving_contracts_by_one_half() {
        let p = half_sq();
        let r = measure_levelset_contraction(
            &p,
            &cfg(0.5),
            array![2.0].view(),
            0.0,
            &SublevelOracle::SolutionSet,
            ContractionOptions::default(),
        )
        .unwrap();
        assert!(!r.ratios.is_empty());
        assert!(r.ratios.iter().all(|q| (q - 0.5).abs() < 1e-10));
    }

    #[test]
    fn start_in_the_sublevel_set_gives_an_empty_series() {
        let p = half_sq();
        let r = measure_levelset_contraction(
            &p,
            &cfg(0.5),
            array![0.0].view(),
            0.0,
            &SublevelOracle::SolutionSet,
            ContractionOptions::default(),
        )
        .unwrap();
        assert!(r.ratios.is_empty() && r.beta_hat.is_none());
    }

    #[test]
    fn theorem_interval_lies_below_one() {
        // 𝔠 < 𝔟 − 1 whenever M ≥ m and ε̲ ≤ ε̄, so admissible θ′ are below 1.
        let c = derive_constants(1.0, 1.0, 0.1, 0.1, 1.0, None).unwrap();
        let t = TheoremCheck::new(&c, Some(1.5));
        let (lo, hi) = t.interval.unwrap();
        assert!(lo < hi && hi < 1.0);
        assert!(!t.applicable);
        let inside = TheoremCheck::new(&c, Some(0.5 * (lo + hi)));
        let beta = inside.beta_theory.unwrap();
        assert!(beta > 0.0 && beta < 1.0);
    }

    #[test]
    fn converse_passes_on_the_quadratic() {
        let p = half_sq();
        let r = measure_levelset_contraction(
            &p,
            &cfg(0.5),
            array![2.0].view(),
            0.0,
            &SublevelOracle::SolutionSet,
            ContractionOptions::default(),
        )
        .unwrap();
        let conv = check_contraction_converse(&p, &r, 0.0, &SublevelOracle::SolutionSet, Sampler::new(200, 1)).unwrap();
        // c₁′ = 0.5/(0.5·1)·1 = 1, and dist/|∇F| = 1 exactly.
        assert!((conv.c1_prime - 1.0).abs() < 1e-9);
        assert!(conv.certificate.certified());
    }
}
