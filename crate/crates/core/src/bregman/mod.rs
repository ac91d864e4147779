//! Bregman distances, the Bregman proximal mapping `T`, the envelope `E` and
//! the gap `G`, plus checkable forms of the inequalities relating them.

mod checks;
mod kernel;

use ndarray::{Array1, ArrayView1};
use serde::Serialize;

pub use checks::{
    check_generalized_descent, check_sufficient_decrease, check_residual_bound, check_gap_bounds, InequalityCheck, InequalityReport,
};
pub use kernel::{
    audit_kernel, bregman_distance, BregmanKernel, GeneralKernel, KernelKind, KernelSpec,
    KernelViolation,
};

use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::problem::{derive_constants, objective, CompositeProblem, SolverConstants};
use crate::Scalar;

/// Inner iteration cap for non-diagonal kernels.
pub const INNER_MAX_ITERS: usize = 10_000;

/// A kernel with a step `ε ∈ [ε̲, ε̄]`.
#[derive(Debug, Clone)]
pub struct BregmanStep<S: Scalar> {
    kernel: BregmanKernel<S>,
    eps: S,
    eps_lo: S,
    eps_hi: S,
}

impl<S: Scalar> BregmanStep<S> {
    pub fn new(kernel: BregmanKernel<S>, eps: S) -> Result<Self> {
        Self::with_bounds(kernel, eps, eps, eps)
    }

    pub fn with_bounds(kernel: BregmanKernel<S>, eps: S, eps_lo: S, eps_hi: S) -> Result<Self> {
        if !(eps_lo > S::zero()) || !(eps_lo <= eps) || !(eps <= eps_hi) || !eps_hi.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "step needs 0 < eps_lo <= eps <= eps_hi, got {eps_lo} <= {eps} <= {eps_hi}"
            )));
        }
        Ok(Self {
            kernel,
            eps,
            eps_lo,
            eps_hi,
        })
    }

    pub fn kernel(&self) -> &BregmanKernel<S> {
        &self.kernel
    }

    pub fn eps(&self) -> S {
        self.eps
    }

    pub fn eps_lo(&self) -> S {
        self.eps_lo
    }

    pub fn eps_hi(&self) -> S {
        self.eps_hi
    }

    /// Constants for this kernel's moduli and the declared step bounds.
    pub fn constants(&self, p: &CompositeProblem<S>) -> Result<SolverConstants<S>> {
        derive_constants(
            self.kernel.m(),
            self.kernel.big_m(),
            self.eps_lo,
            self.eps_hi,
            p.lipschitz(),
            p.rho(),
        )
    }
}

/// One element `t ∈ T(x)` with the envelope and gap at `x`.
#[derive(Debug, Clone, Serialize)]
pub struct SubproblemSolution<S> {
    pub point: Array1<S>,
    pub inner_residual: S,
    pub inner_iters: usize,
    pub envelope_value: S,
    pub gap_value: S,
    /// `F(x)` at the point the subproblem was formed.
    pub objective_at_x: S,
}

/// Default inner tolerance `1e−10·(1+‖x‖)`.
pub fn default_inner_tol<S: Scalar>(x: ArrayView1<S>) -> S {
    S::lit(1e-10) * (S::one() + linalg::norm(x))
}

/// Proximal-gradient iteration on `y ↦ ⟨∇f(x), y⟩ + D(x,y)/ε + g(y)` with step
/// `ε/M`, started at `y0`. Returns the final iterate, its residual and the
/// iteration count.
pub fn inner_prox_gradient<S: Scalar>(
    p: &CompositeProblem<S>,
    step: &BregmanStep<S>,
    x: ArrayView1<S>,
    grad_x: ArrayView1<S>,
    y0: ArrayView1<S>,
    inner_tol: S,
) -> Result<(Array1<S>, S, usize)> {
    let kernel = &step.kernel;
    let scale = kernel.big_m() / step.eps;
    let weights = Array1::from_elem(x.len(), scale);
    let mut y = y0.to_owned();
    let mut residual = S::infinity();
    for j in 1..=INNER_MAX_ITERS {
        let smooth_grad = &grad_x + &kernel.gradient_difference(x, y.view())?.mapv(|v| v / step.eps);
        let next = p.g().scaled_prox(y.view(), smooth_grad.view(), weights.view());
        residual = linalg::dist(next.view(), y.view()) * scale;
        y = next;
        if !linalg::is_finite(y.view()) {
            return Err(Error::InnerSolver {
                residual: f64::INFINITY,
                iters: j,
            });
        }
        if residual <= inner_tol {
            return Ok((y, residual, j));
        }
    }
    Err(Error::InnerSolver {
        residual: residual.as_f64(),
        iters: INNER_MAX_ITERS,
    })
}

/// Computes `t ∈ T_{D,ε}(x)` together with `E_{D,ε}(x)` and `G_{D,ε}(x)`.
///
/// Diagonal quadratic kernels are solved in closed form through the scaled
/// prox of `g`; other kernels use [`inner_prox_gradient`] started at `x`.
/// `inner_tol = None` selects [`default_inner_tol`].
pub fn solve_subproblem<S: Scalar>(
    p: &CompositeProblem<S>,
    step: &BregmanStep<S>,
    x: ArrayView1<S>,
    inner_tol: Option<S>,
) -> Result<SubproblemSolution<S>> {
    let fx_total = objective(p, x)?;
    if !fx_total.is_finite() {
        return Err(Error::InvalidArgument("x is outside dom F".into()));
    }
    let grad = p.gradient(x)?;
    let tol = inner_tol.unwrap_or_else(|| default_inner_tol(x));
    if !(tol > S::zero()) {
        return Err(Error::InvalidArgument("inner_tol must be positive".into()));
    }
    let (point, inner_residual, inner_iters) = match step.kernel.diagonal_weights(x.len()) {
        Some(w) => {
            check_dim(w.len(), x.len())?;
            let w = w.mapv(|v| v / step.eps);
            (p.g().scaled_prox(x, grad.view(), w.view()), S::zero(), 0)
        }
        None => inner_prox_gradient(p, step, x, grad.view(), x, tol)?,
    };
    assemble(p, step, x, fx_total, grad.view(), point, inner_residual, inner_iters)
}

#[allow(clippy::too_many_arguments)]
fn assemble<S: Scalar>(
    p: &CompositeProblem<S>,
    step: &BregmanStep<S>,
    x: ArrayView1<S>,
    fx_total: S,
    grad: ArrayView1<S>,
    point: Array1<S>,
    inner_residual: S,
    inner_iters: usize,
) -> Result<SubproblemSolution<S>> {
    let gt = p.g().value(point.view());
    if !gt.is_finite() {
        return Err(Error::Domain {
            term: "g",
            point: point.iter().map(|v| v.as_f64()).collect(),
        });
    }
    let d = bregman_distance(&step.kernel, x, point.view())?;
    let lin = grad.dot(&(&point - &x));
    let fx = p.f().value(x);
    let gx = p.g().value(x);
    let envelope_value = fx + lin + gt + d / step.eps;
    // −(1/ε)·min{⟨∇f(x), y−x⟩ + g(y) − g(x) + D(x,y)/ε}
    let raw_gap = -(lin + (gt - gx) + d / step.eps) / step.eps;
    let gap_value = raw_gap.max(S::zero());
    Ok(SubproblemSolution {
        point,
        inner_residual,
        inner_iters,
        envelope_value,
        gap_value,
        objective_at_x: fx_total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{Quadratic, Zero, L1};
    use ndarray::{array, Array1};

    fn half_sq_1d() -> CompositeProblem<f64> {
        CompositeProblem::new(Quadratic::diagonal(array![1.0], Array1::zeros(1)).unwrap(), Zero)
    }

    #[test]
    fn one_dimensional_quadratic() {
        let p = half_sq_1d();
        let step = BregmanStep::new(BregmanKernel::euclidean(), 0.5).unwrap();
        let s = solve_subproblem(&p, &step, array![2.0].view(), None).unwrap();
        assert_eq!(s.point, array![1.0]);
        assert_eq!(s.envelope_value, 1.0);
        assert_eq!(s.gap_value, 2.0);
    }

    #[test]
    fn l1_soft_threshold() {
        let f = Quadratic::diagonal(array![0.0, 0.0], Array1::zeros(2)).unwrap();
        let p = CompositeProblem::new(f, L1::new(1.0).unwrap());
        let step = BregmanStep::new(BregmanKernel::euclidean(), 1.0).unwrap();
        let s = solve_subproblem(&p, &step, array![2.0, -0.5].view(), None).unwrap();
        assert_eq!(s.point, array![1.0, 0.0]);
    }

    #[test]
    fn spd_inner_solver_agrees_with_closed_form_for_identity() {
        let f = Quadratic::<f64>::diagonal(array![1.0, 3.0], array![0.5, -1.0]).unwrap();
        let p = CompositeProblem::new(f, L1::new(0.3).unwrap());
        let x = array![1.0, -2.0];
        let spd = BregmanStep::new(BregmanKernel::spd(ndarray::Array2::eye(2)).unwrap(), 0.2).unwrap();
        let euc = BregmanStep::new(BregmanKernel::euclidean(), 0.2).unwrap();
        let a = solve_subproblem(&p, &spd, x.view(), Some(1e-13)).unwrap();
        let b = solve_subproblem(&p, &euc, x.view(), None).unwrap();
        assert!(linalg::dist(a.point.view(), b.point.view()) < 1e-13);
        assert!((a.gap_value - b.gap_value).abs() < 1e-12);
    }

    #[test]
    fn envelope_identity() {
        let f = Quadratic::<f64>::new(array![[2.0, 0.5], [0.5, 1.0]], array![1.0, 0.0]).unwrap();
        let p = CompositeProblem::new(f, L1::new(0.2).unwrap());
        let step = BregmanStep::new(BregmanKernel::spd(array![[1.5, 0.2], [0.2, 1.0]]).unwrap(), 0.3).unwrap();
        let x = array![0.7, -1.1];
        let s = solve_subproblem(&p, &step, x.view(), None).unwrap();
        let fx = objective(&p, x.view()).unwrap();
        assert!((s.envelope_value - (fx - 0.3 * s.gap_value)).abs() < 1e-9 * (1.0 + fx.abs()));
    }

    #[test]
    fn rejects_points_outside_domain() {
        let f = Quadratic::diagonal(array![1.0], Array1::zeros(1)).unwrap();
        let p = CompositeProblem::new(f, crate::problem::IndicatorBox::new(0.0, 1.0).unwrap());
        let step = BregmanStep::new(BregmanKernel::euclidean(), 0.5).unwrap();
        assert!(solve_subproblem(&p, &step, array![-1.0].view(), None).is_err());
    }

    #[test]
    fn step_bounds_are_enforced() {
        assert!(BregmanStep::with_bounds(BregmanKernel::<f64>::euclidean(), 0.5, 0.6, 0.7).is_err());
        assert!(BregmanStep::new(BregmanKernel::<f64>::euclidean(), 0.0).is_err());
    }
}
