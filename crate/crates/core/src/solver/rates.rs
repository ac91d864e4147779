use ndarray::ArrayView1;
use serde::Serialize;

use super::SolverTrace;
use crate::bregman::{InequalityCheck, InequalityReport};
use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::{objective, CompositeProblem};
use crate::Scalar;

/// Value-proximity bound `F(x^{k+1}) − F(x̄) ≤ κ′‖x^k − x^{k+1}‖²` along a
/// trace, restricted to iterates in `𝔅(x̄; η, ν)`.
#[derive(Debug, Clone, Serialize)]
pub struct VpEbReport {
    pub report: InequalityReport,
    /// Smallest `κ′` making every in-region iterate pass; `None` when vacuous.
    pub minimal_kappa: Option<f64>,
    pub in_region: usize,
}

impl VpEbReport {
    pub fn vacuous(&self) -> bool {
        self.in_region == 0
    }
}

pub fn check_vp_eb<S: Scalar>(
    p: &CompositeProblem<S>,
    trace: &SolverTrace<S>,
    x_bar: ArrayView1<S>,
    kappa_prime: S,
    eta: S,
    nu: S,
) -> Result<VpEbReport> {
    if !(eta > S::zero()) || !(nu > S::zero()) {
        return Err(Error::InvalidArgument("eta and nu must be positive".into()));
    }
    let f_bar = objective(p, x_bar)?;
    let values = trace.values();
    let points: Vec<_> = trace.points().collect();
    let mut checks = Vec::new();
    let mut worst = S::zero();
    for r in &trace.records {
        let next = points[r.k + 1];
        let f_next = values[r.k + 1];
        let inside = linalg::dist(next, x_bar) < eta && f_next > f_bar && f_next < f_bar + nu;
        if !inside {
            continue;
        }
        let sq = r.step_norm * r.step_norm;
        let gap = f_next - f_bar;
        worst = worst.max(if sq > S::zero() { gap / sq } else { S::infinity() });
        checks.push(InequalityCheck::leq(&format!("k={}", r.k), gap, kappa_prime * sq));
    }
    if checks.is_empty() {
        log::info!("value-proximity check: no iterate in the region");
    }
    Ok(VpEbReport {
        in_region: checks.len(),
        minimal_kappa: (!checks.is_empty()).then(|| worst.as_f64()),
        report: InequalityReport { checks },
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    /// `max (F^{k+1} − F̄)/(F^k − F̄)` over the tail.
    pub beta_q: f64,
    /// Geometric mean of `‖x^{k+1} − x̄‖/‖x^k − x̄‖` over the tail.
    pub beta_r: Option<f64>,
    pub linear: bool,
    pub tail_len: usize,
}

/// Q- and R-rate estimates over the last `tail_fraction` of the transitions
/// `x^k → x^{k+1}`.
pub fn measure_rates<S: Scalar>(
    trace: &SolverTrace<S>,
    f_bar: S,
    x_bar: ArrayView1<S>,
    tail_fraction: f64,
) -> Result<RateReport> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "tail_fraction must lie in (0, 1], got {tail_fraction}"
        )));
    }
    let n = trace.records.len();
    if n == 0 {
        return Err(Error::InvalidArgument("trace has no transitions".into()));
    }
    let tail_len = ((n as f64 * tail_fraction).ceil() as usize).clamp(1, n);
    let start = n - tail_len;
    let values = trace.values();
    if let Some(k) = (start..=n).find(|&k| !(values[k] > f_bar)) {
        return Err(Error::TargetValue {
            k,
            value: values[k].as_f64(),
            target: f_bar.as_f64(),
        });
    }
    let beta_q = (start..n)
        .map(|k| ((values[k + 1] - f_bar) / (values[k] - f_bar)).as_f64())
        .fold(f64::NEG_INFINITY, f64::max);

    let floor = 100.0 * f64::EPSILON * linalg::norm(x_bar).as_f64();
    let errors: Vec<f64> = trace.points().map(|x| linalg::dist(x, x_bar).as_f64()).collect();
    let logs: Vec<f64> = (start..n)
        .filter(|&k| errors[k] > floor && errors[k + 1] > floor)
        .map(|k| (errors[k + 1] / errors[k]).ln())
        .collect();
    let beta_r = (!logs.is_empty()).then(|| (logs.iter().sum::<f64>() / logs.len() as f64).exp());
    Ok(RateReport {
        beta_q,
        beta_r,
        linear: beta_q < 1.0 - 1e-6,
        tail_len,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bregman::BregmanKernel;
    use crate::problem::{Quadratic, Zero};
    use crate::solver::{run_vbpg, EpsSchedule, KernelSchedule, VbpgConfig};
    use ndarray::{array, Array1};

    fn half_sq_trace(x0: f64, iters: usize) -> (CompositeProblem<f64>, SolverTrace<f64>) {
        let p = CompositeProblem::new(Quadratic::diagonal(array![1.0], Array1::zeros(1)).unwrap(), Zero);
        let cfg = VbpgConfig::new(
            KernelSchedule::Constant(BregmanKernel::euclidean()),
            EpsSchedule::constant(0.5).unwrap(),
        )
        .max_iters(iters);
        let t = run_vbpg(&p, &cfg, array![x0].view()).unwrap();
        (p, t)
    }

    #[test]
    fn closed_form_rates() {
        let (_, t) = half_sq_trace(2.0, 40);
        let r = measure_rates(&t, 0.0, array![0.0].view(), 0.5).unwrap();
        assert!((r.beta_q - 0.25).abs() < 1e-12);
        assert!((r.beta_r.unwrap() - 0.5).abs() < 1e-12);
        assert!(r.linear);
    }

    #[test]
    fn vp_eb_minimal_constant_is_half() {
        let (p, t) = half_sq_trace(2.0, 30);
        let rep = check_vp_eb(&p, &t, array![0.0].view(), 0.5, 10.0, 10.0).unwrap();
        assert!((rep.minimal_kappa.unwrap() - 0.5).abs() < 1e-12);
        assert!(rep.report.passed());
        let tight = check_vp_eb(&p, &t, array![0.0].view(), 0.4, 10.0, 10.0).unwrap();
        assert!(!tight.report.passed());
    }

    #[test]
    fn fixed_point_trace() {
        let (p, t) = half_sq_trace(0.0, 10);
        assert!(check_vp_eb(&p, &t, array![0.0].view(), 1.0, 1.0, 1.0).unwrap().vacuous());
        let err = measure_rates(&t, 0.0, array![0.0].view(), 1.0).unwrap_err();
        assert!(matches!(err, Error::TargetValue { .. }));
    }
}
