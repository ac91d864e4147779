use std::ops::Range;

use ndarray::{s, Array1, Array2, ArrayView1};

use super::schedule::BlockCurvature;
use super::{IterationRecord, SolverTrace, StopReason, TraceSummary};
use crate::bregman::{default_inner_tol, INNER_MAX_ITERS};
use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::{derive_constants, objective, CompositeProblem};
use crate::Scalar;

/// Blockwise update for quadratic `f = ½xᵀQx − bᵀx` with separable `g`:
/// each block solves
/// `min ⟨∇ᵢf(x^k), y⟩ + g(y) + (1/2ε)(y − xᵢ^k)ᵀ(Q_ii + cᵢI)(y − xᵢ^k)`
/// independently of the others.
///
/// Blocks are solved by Cholesky when `g` is zero and by proximal gradient
/// with step `ε/λ_max(Q_ii + cᵢI)` otherwise. The descent regime is reported
/// in the trace constants but not enforced.
#[allow(clippy::too_many_arguments)]
pub fn run_regularized_jacobi<S: Scalar>(
    p: &CompositeProblem<S>,
    blocks: &[Range<usize>],
    c: &[S],
    eps: S,
    x0: ArrayView1<S>,
    iters: usize,
    inner_tol: Option<S>,
) -> Result<SolverTrace<S>> {
    let qf = p.f().quadratic_form().ok_or_else(|| {
        Error::Capability("regularized Jacobi needs a quadratic smooth term".into())
    })?;
    if !p.g().coordinate_separable() {
        return Err(Error::Capability(
            "regularized Jacobi needs a block-separable nonsmooth term".into(),
        ));
    }
    if !(eps > S::zero()) {
        return Err(Error::InvalidArgument("eps must be positive".into()));
    }
    let curv = BlockCurvature::new(&qf.q, blocks, c)?;
    let solvers = curv
        .matrices
        .iter()
        .map(|h| BlockSolver::new(h, p.g().is_zero()))
        .collect::<Result<Vec<_>>>()?;
    let constants = derive_constants(curv.m, curv.big_m, eps, eps, p.lipschitz(), p.rho())?;
    let residual_factor = constants.residual_factor();

    let mut x = x0.to_owned();
    let mut records = Vec::with_capacity(iters);
    let mut stop_reason = StopReason::MaxIterations;
    for k in 0..iters {
        let at = |e: Error| Error::AtIteration { k, source: Box::new(e) };
        let fx = objective(p, x.view()).map_err(at)?;
        let grad = p.gradient(x.view()).map_err(at)?;
        let tol = inner_tol.unwrap_or_else(|| default_inner_tol(x.view()));
        let mut next = x.clone();
        let mut distance = S::zero();
        for ((b, solver), h) in curv.blocks.iter().zip(&solvers).zip(&curv.matrices) {
            let xb = x.slice(s![b.clone()]);
            let gb = grad.slice(s![b.clone()]);
            let yb = solver.solve(p, xb, gb, eps, tol).map_err(at)?;
            let d = &yb - &xb;
            distance += S::lit(0.5) * d.dot(&h.dot(&d));
            next.slice_mut(s![b.clone()]).assign(&yb);
        }
        let step_norm = linalg::dist(x.view(), next.view());
        let lin = grad.dot(&(&next - &x));
        let gx = p.g().value(x.view());
        let gt = p.g().value(next.view());
        let envelope = p.f().value(x.view()) + lin + gt + distance / eps;
        let gap = (-(lin + (gt - gx) + distance / eps) / eps).max(S::zero());
        records.push(IterationRecord {
            k,
            x: x.clone(),
            f_value: fx,
            step_norm,
            gap: Some(gap),
            envelope: Some(envelope),
            residual_bound: residual_factor * step_norm,
            eps,
        });
        x = next;
        if step_norm == S::zero() {
            stop_reason = StopReason::StepTolerance;
            break;
        }
    }
    let f_limit = objective(p, x.view())?;
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

enum BlockSolver<S> {
    Cholesky { factor: Array2<S> },
    ProxGradient { h: Array2<S>, lmax: S },
}

impl<S: Scalar> BlockSolver<S> {
    fn new(h: &Array2<S>, smooth_only: bool) -> Result<Self> {
        Ok(if smooth_only {
            Self::Cholesky {
                factor: linalg::cholesky(h.view())?,
            }
        } else {
            let eig = linalg::symmetric_eigenvalues(h.view())?;
            Self::ProxGradient {
                h: h.clone(),
                lmax: eig[eig.len() - 1],
            }
        })
    }

    fn solve(
        &self,
        p: &CompositeProblem<S>,
        xb: ArrayView1<S>,
        gb: ArrayView1<S>,
        eps: S,
        tol: S,
    ) -> Result<Array1<S>> {
        match self {
            Self::Cholesky { factor } => {
                let dir = linalg::cholesky_solve(factor.view(), gb);
                Ok(&xb - &dir.mapv(|v| v * eps))
            }
            Self::ProxGradient { h, lmax } => {
                let scale = *lmax / eps;
                let weights = Array1::from_elem(xb.len(), scale);
                let mut y = xb.to_owned();
                let mut residual = S::infinity();
                for _ in 0..INNER_MAX_ITERS {
                    let smooth_grad = &gb + &h.dot(&(&y - &xb)).mapv(|v| v / eps);
                    let next = p.g().scaled_prox(y.view(), smooth_grad.view(), weights.view());
                    residual = linalg::dist(next.view(), y.view()) * scale;
                    y = next;
                    if residual <= tol {
                        return Ok(y);
                    }
                }
                Err(Error::InnerSolver {
                    residual: residual.as_f64(),
                    iters: INNER_MAX_ITERS,
                })
            }
        }
    }
}

#[cfg(test)]
#[allow(clippy::single_range_in_vec_init)]
mod tests {
    use super::*;
    use crate::problem::{LeastSquares, Quadratic, Zero};
    use ndarray::array;

    #[test]
    fn two_scalar_blocks_closed_form() {
        let f = Quadratic::diagonal(array![1.0, 2.0], array![1.0, 1.0]).unwrap();
        let p = CompositeProblem::new(f, Zero);
        let eps = 0.5;
        let trace = run_regularized_jacobi(&p, &[0..1, 1..2], &[1.0, 1.0], eps, array![0.0, 0.0].view(), 3, None)
            .unwrap();
        // xᵢ⁺ = xᵢ − ε(Qᵢᵢxᵢ − bᵢ)/(Qᵢᵢ + cᵢ)
        let mut x = [0.0f64, 0.0];
        for r in &trace.records {
            assert!((r.x[0] - x[0]).abs() < 1e-15 && (r.x[1] - x[1]).abs() < 1e-15);
            x = [x[0] - eps * (x[0] - 1.0) / 2.0, x[1] - eps * (2.0 * x[1] - 1.0) / 3.0];
        }
    }

    #[test]
    fn single_block_without_regularization_is_newton() {
        let f = Quadratic::new(array![[2.0, 0.5], [0.5, 1.0]], array![1.0, -1.0]).unwrap();
        let p = CompositeProblem::new(f, Zero);
        let trace = run_regularized_jacobi(&p, &[0..2], &[0.0], 1.0, array![3.0, 3.0].view(), 2, None).unwrap();
        let x1 = &trace.summary.final_point;
        let g = p.gradient(x1.view()).unwrap();
        assert!(linalg::norm(g.view()) < 1e-12);
    }

    #[test]
    fn non_quadratic_smooth_term_is_refused() {
        let dom = crate::problem::BoxDomain::uniform(1, -1.0, 1.0).unwrap();
        let f = crate::problem::Polynomial1d::new(vec![0.0, 0.0, 0.0, 1.0], 6.0, dom).unwrap();
        let p = CompositeProblem::new(f, Zero);
        let err = run_regularized_jacobi(&p, &[0..1], &[1.0], 0.1, array![0.5].view(), 1, None).unwrap_err();
        assert!(matches!(err, Error::Capability(_)));
    }

    #[test]
    fn least_squares_is_accepted() {
        let f = LeastSquares::new(array![[1.0, 0.0], [1.0, 1.0]], array![1.0, 2.0]).unwrap();
        let p = CompositeProblem::new(f, crate::problem::L1::new(0.1).unwrap());
        let trace = run_regularized_jacobi(&p, &[0..1, 1..2], &[2.0, 2.0], 0.5, array![0.0, 0.0].view(), 50, None)
            .unwrap();
        let vals = trace.values();
        assert!(vals.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }
}
