//! The VBPG outer iteration, its trace, and rate measurements.

mod jacobi;
mod rates;
mod schedule;

use ndarray::{Array1, ArrayView1};
use serde::Serialize;

pub use jacobi::run_regularized_jacobi;
pub use rates::{check_vp_eb, measure_rates, RateReport, VpEbReport};
pub use schedule::{even_blocks, BlockCurvature, EpsSchedule, KernelSchedule};

use crate::bregman::{solve_subproblem, BregmanStep};
use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::{derive_constants, objective, CompositeProblem, SolverConstants};
use crate::Scalar;

#[derive(Debug, Clone)]
pub struct VbpgConfig<S: Scalar> {
    pub schedule: KernelSchedule<S>,
    pub eps: EpsSchedule<S>,
    pub max_iters: usize,
    /// Stop once `‖x^k − x^{k+1}‖ ≤ stop_tol`.
    pub stop_tol: S,
    /// `None` uses `1e−10·(1+‖x^k‖)`.
    pub inner_tol: Option<S>,
    pub record_gap: bool,
}

impl<S: Scalar> VbpgConfig<S> {
    pub fn new(schedule: KernelSchedule<S>, eps: EpsSchedule<S>) -> Self {
        Self {
            schedule,
            eps,
            max_iters: 1000,
            stop_tol: S::lit(1e-10),
            inner_tol: None,
            record_gap: true,
        }
    }

    pub fn max_iters(mut self, n: usize) -> Self {
        self.max_iters = n;
        self
    }

    pub fn stop_tol(mut self, tol: S) -> Self {
        self.stop_tol = tol;
        self
    }

    pub fn inner_tol(mut self, tol: S) -> Self {
        self.inner_tol = Some(tol);
        self
    }
}

/// State at iterate `k` and the step taken from it.
#[derive(Debug, Clone, Serialize)]
pub struct IterationRecord<S> {
    pub k: usize,
    pub x: Array1<S>,
    /// `F(x^k)`.
    pub f_value: S,
    /// `‖x^k − x^{k+1}‖`.
    pub step_norm: S,
    pub gap: Option<S>,
    pub envelope: Option<S>,
    /// `(L + M/ε̲)·‖x^k − x^{k+1}‖`.
    pub residual_bound: S,
    pub eps: S,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    StepTolerance,
    MaxIterations,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceSummary<S> {
    pub iterations: usize,
    pub final_point: Array1<S>,
    /// Objective at the final point, standing in for the limit value.
    pub f_limit: S,
    pub stop_reason: StopReason,
    pub constants: SolverConstants<S>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverTrace<S> {
    pub records: Vec<IterationRecord<S>>,
    pub summary: TraceSummary<S>,
}

impl<S: Scalar> SolverTrace<S> {
    /// `x^0, …, x^{K+1}`.
    pub fn points(&self) -> impl Iterator<Item = ArrayView1<'_, S>> + '_ {
        self.records
            .iter()
            .map(|r| r.x.view())
            .chain(std::iter::once(self.summary.final_point.view()))
    }

    /// `F(x^0), …, F(x^{K+1})`.
    pub fn values(&self) -> Vec<S> {
        self.records
            .iter()
            .map(|r| r.f_value)
            .chain(std::iter::once(self.summary.f_limit))
            .collect()
    }

    /// Indices `k` where `F(x^{k+1}) > F(x^k) − a_k‖x^k−x^{k+1}‖² + tol`.
    pub fn descent_violations(&self) -> Vec<usize> {
        let values = self.values();
        self.records
            .iter()
            .filter(|r| {
                let a = self.summary.constants.a_at(r.eps);
                let rhs = r.f_value - a * r.step_norm * r.step_norm;
                let lhs = values[r.k + 1];
                lhs > rhs + S::lit(1e-8) * (S::one() + r.f_value.abs())
            })
            .map(|r| r.k)
            .collect()
    }
}

/// Runs `x^{k+1} ∈ argmin ⟨∇f(x^k), y−x^k⟩ + g(y) + D_k(x^k, y)/ε^k` from `x0`.
///
/// Refuses configurations with `ε̄ ≥ m/L`, where sufficient decrease is not
/// guaranteed.
pub fn run_vbpg<S: Scalar>(
    p: &CompositeProblem<S>,
    cfg: &VbpgConfig<S>,
    x0: ArrayView1<S>,
) -> Result<SolverTrace<S>> {
    if !(cfg.stop_tol > S::zero()) {
        return Err(Error::InvalidArgument("stop_tol must be positive".into()));
    }
    let mut plan = cfg.schedule.plan(p)?;
    let constants = derive_constants(plan.m, plan.big_m, cfg.eps.lo(), cfg.eps.hi(), p.lipschitz(), p.rho())?;
    constants.require_descent()?;
    let f0 = objective(p, x0)?;
    if !f0.is_finite() {
        return Err(Error::InvalidArgument("x0 is outside dom F".into()));
    }
    let residual_factor = constants.residual_factor();
    let mut records = Vec::new();
    let mut x = x0.to_owned();
    let mut prev: Option<(Array1<S>, Array1<S>)> = None;
    let mut stop_reason = StopReason::MaxIterations;
    for k in 0..cfg.max_iters {
        let at = |e: Error| Error::AtIteration { k, source: Box::new(e) };
        let grad = p.gradient(x.view()).map_err(at)?;
        let kernel = plan
            .kernel_at(k, x.view(), grad.view(), prev.as_ref().map(|(a, b)| (a.view(), b.view())))
            .map_err(at)?;
        let step = BregmanStep::with_bounds(kernel, cfg.eps.at(k), cfg.eps.lo(), cfg.eps.hi()).map_err(at)?;
        let sol = solve_subproblem(p, &step, x.view(), cfg.inner_tol).map_err(at)?;
        let step_norm = linalg::dist(x.view(), sol.point.view());
        records.push(IterationRecord {
            k,
            x: x.clone(),
            f_value: sol.objective_at_x,
            step_norm,
            gap: cfg.record_gap.then_some(sol.gap_value),
            envelope: cfg.record_gap.then_some(sol.envelope_value),
            residual_bound: residual_factor * step_norm,
            eps: step.eps(),
        });
        prev = Some((std::mem::replace(&mut x, sol.point), grad));
        if step_norm <= cfg.stop_tol {
            stop_reason = StopReason::StepTolerance;
            break;
        }
    }
    let f_limit = objective(p, x.view())?;
    log::debug!(
        "vbpg: {} iterations, F = {f_limit}, stop = {stop_reason:?}",
        records.len()
    );
    Ok(SolverTrace {
        summary: TraceSummary {
            iterations: records.len(),
            final_point: x,
            f_limit,
            stop_reason,
            constants,
        },
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bregman::BregmanKernel;
    use crate::problem::{Quadratic, Zero};
    use ndarray::{array, Array1};

    fn half_sq_1d() -> CompositeProblem<f64> {
        CompositeProblem::new(Quadratic::diagonal(array![1.0], Array1::zeros(1)).unwrap(), Zero)
    }

    fn cfg(eps: f64) -> VbpgConfig<f64> {
        VbpgConfig::new(
            KernelSchedule::Constant(BregmanKernel::euclidean()),
            EpsSchedule::constant(eps).unwrap(),
        )
    }

    #[test]
    fn halving_recursion() {
        let trace = run_vbpg(&half_sq_1d(), &cfg(0.5).max_iters(30), array![2.0].view()).unwrap();
        for r in &trace.records {
            let expected = 2.0 * 0.5f64.powi(r.k as i32);
            assert_eq!(r.x[0], expected);
            assert_eq!(r.f_value, 2.0 * 0.25f64.powi(r.k as i32));
        }
        assert!(trace.descent_violations().is_empty());
    }

    #[test]
    fn fixed_point_stops_immediately() {
        let trace = run_vbpg(&half_sq_1d(), &cfg(0.5), array![0.0].view()).unwrap();
        assert_eq!(trace.summary.iterations, 1);
        assert_eq!(trace.summary.stop_reason, StopReason::StepTolerance);
        assert!(trace.records[0].step_norm <= 1e-10);
    }

    #[test]
    fn refuses_non_descent_regime() {
        let err = run_vbpg(&half_sq_1d(), &cfg(1.0), array![2.0].view()).unwrap_err();
        assert!(matches!(err, Error::NonDescent { .. }));
    }

    #[test]
    fn bb_schedule_stays_within_moduli() {
        let f = Quadratic::diagonal(array![1.0, 10.0], Array1::zeros(2)).unwrap();
        let p = CompositeProblem::new(f, Zero);
        let cfg = VbpgConfig::new(
            KernelSchedule::DiagonalBb { m: 1.0, big_m: 10.0 },
            EpsSchedule::constant(0.09).unwrap(),
        )
        .max_iters(200);
        let trace = run_vbpg(&p, &cfg, array![1.0, 1.0].view()).unwrap();
        assert!(trace.descent_violations().is_empty());
        assert!(trace.summary.f_limit < 1e-12);
    }

    #[test]
    fn single_precision_run() {
        let f = Quadratic::<f32>::diagonal(array![1.0f32], Array1::zeros(1)).unwrap();
        let p = CompositeProblem::new(f, Zero);
        let cfg = VbpgConfig::new(
            KernelSchedule::Constant(BregmanKernel::euclidean()),
            EpsSchedule::constant(0.5f32).unwrap(),
        )
        .stop_tol(1e-6);
        let trace = run_vbpg(&p, &cfg, array![2.0f32].view()).unwrap();
        assert_eq!(trace.records[3].x[0], 0.25);
    }
}
