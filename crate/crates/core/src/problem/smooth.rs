use std::fmt::Debug;

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::problem::BoxDomain;
use crate::Scalar;

/// Dense quadratic `½xᵀQx − bᵀx` exposed by smooth terms that have one.
#[derive(Debug, Clone)]
pub struct QuadraticForm<S> {
    pub q: Array2<S>,
    pub b: Array1<S>,
}

/// Differentiable part `f` of the composite objective.
pub trait SmoothTerm<S: Scalar>: Debug + Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: ArrayView1<S>) -> S;
    fn gradient(&self, x: ArrayView1<S>) -> Array1<S>;
    /// Declared Lipschitz constant of the gradient on [`SmoothTerm::domain_box`].
    fn lipschitz(&self) -> S;
    /// Box on which the Lipschitz constant is claimed. `None` means all of ℝⁿ.
    fn domain_box(&self) -> Option<&BoxDomain<S>> {
        None
    }
    /// Hessian and linear term when `f` is quadratic up to a constant.
    fn quadratic_form(&self) -> Option<QuadraticForm<S>> {
        None
    }
}

/// `f(x) = ½xᵀQx − bᵀx + c`.
#[derive(Debug, Clone)]
pub struct Quadratic<S> {
    q: Array2<S>,
    b: Array1<S>,
    c: S,
    lipschitz: S,
}

impl<S: Scalar> Quadratic<S> {
    /// Builds the term with `L = λ_max(Q)` computed from the spectrum.
    pub fn new(q: Array2<S>, b: Array1<S>) -> Result<Self> {
        let eig = linalg::symmetric_eigenvalues(q.view())?;
        let lipschitz = eig
            .iter()
            .fold(S::zero(), |m, &v| m.max(v.abs()));
        Self::with_lipschitz(q, b, lipschitz)
    }

    pub fn with_lipschitz(q: Array2<S>, b: Array1<S>, lipschitz: S) -> Result<Self> {
        check_dim(q.nrows(), q.ncols())?;
        check_dim(q.nrows(), b.len())?;
        if !(lipschitz >= S::zero()) || !lipschitz.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "lipschitz constant must be finite and nonnegative, got {}",
                lipschitz
            )));
        }
        Ok(Self {
            q,
            b,
            c: S::zero(),
            lipschitz,
        })
    }

    pub fn diagonal(diag: Array1<S>, b: Array1<S>) -> Result<Self> {
        let lipschitz = diag.iter().fold(S::zero(), |m, &v| m.max(v.abs()));
        Self::with_lipschitz(Array2::from_diag(&diag), b, lipschitz)
    }

    pub fn with_constant(mut self, c: S) -> Self {
        self.c = c;
        self
    }

    pub fn q(&self) -> &Array2<S> {
        &self.q
    }

    pub fn b(&self) -> &Array1<S> {
        &self.b
    }
}

impl<S: Scalar> SmoothTerm<S> for Quadratic<S> {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn value(&self, x: ArrayView1<S>) -> S {
        let half = S::lit(0.5);
        half * x.dot(&self.q.dot(&x)) - self.b.dot(&x) + self.c
    }

    fn gradient(&self, x: ArrayView1<S>) -> Array1<S> {
        self.q.dot(&x) - &self.b
    }

    fn lipschitz(&self) -> S {
        self.lipschitz
    }

    fn quadratic_form(&self) -> Option<QuadraticForm<S>> {
        Some(QuadraticForm {
            q: self.q.clone(),
            b: self.b.clone(),
        })
    }
}

/// `f(x) = ½‖Ax − b‖²`.
#[derive(Debug, Clone)]
pub struct LeastSquares<S> {
    a: Array2<S>,
    b: Array1<S>,
    lipschitz: S,
}

impl<S: Scalar> LeastSquares<S> {
    /// Builds the term with `L = λ_max(AᵀA)` from power iteration.
    pub fn new(a: Array2<S>, b: Array1<S>) -> Result<Self> {
        let ata = a.t().dot(&a);
        let lipschitz = linalg::power_iteration(ata.view(), 100_000, S::lit(1e-15));
        log::debug!("least squares: lambda_max(A^T A) = {lipschitz} by power iteration");
        Self::with_lipschitz(a, b, lipschitz)
    }

    pub fn with_lipschitz(a: Array2<S>, b: Array1<S>, lipschitz: S) -> Result<Self> {
        check_dim(a.nrows(), b.len())?;
        if !(lipschitz >= S::zero()) || !lipschitz.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "lipschitz constant must be finite and nonnegative, got {}",
                lipschitz
            )));
        }
        Ok(Self { a, b, lipschitz })
    }

    pub fn a(&self) -> &Array2<S> {
        &self.a
    }

    pub fn b(&self) -> &Array1<S> {
        &self.b
    }
}

impl<S: Scalar> SmoothTerm<S> for LeastSquares<S> {
    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn value(&self, x: ArrayView1<S>) -> S {
        let r = self.a.dot(&x) - &self.b;
        S::lit(0.5) * r.dot(&r)
    }

    fn gradient(&self, x: ArrayView1<S>) -> Array1<S> {
        let r = self.a.dot(&x) - &self.b;
        self.a.t().dot(&r)
    }

    fn lipschitz(&self) -> S {
        self.lipschitz
    }

    fn quadratic_form(&self) -> Option<QuadraticForm<S>> {
        Some(QuadraticForm {
            q: self.a.t().dot(&self.a),
            b: self.a.t().dot(&self.b),
        })
    }
}

/// Univariate polynomial `Σ cₖ xᵏ` whose gradient is Lipschitz on a bounded box.
#[derive(Debug, Clone)]
pub struct Polynomial1d<S> {
    coeffs: Vec<S>,
    lipschitz: S,
    domain: BoxDomain<S>,
}

impl<S: Scalar> Polynomial1d<S> {
    /// `coeffs[k]` multiplies `xᵏ`.
    pub fn new(coeffs: Vec<S>, lipschitz: S, domain: BoxDomain<S>) -> Result<Self> {
        check_dim(1, domain.dim())?;
        if coeffs.is_empty() {
            return Err(Error::InvalidArgument("polynomial needs coefficients".into()));
        }
        Ok(Self {
            coeffs,
            lipschitz,
            domain,
        })
    }

    fn horner(coeffs: &[S], t: S) -> S {
        coeffs.iter().rev().fold(S::zero(), |acc, &c| acc * t + c)
    }

    fn derivative_coeffs(&self) -> Vec<S> {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| c * S::lit(k as f64))
            .collect()
    }
}

impl<S: Scalar> SmoothTerm<S> for Polynomial1d<S> {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: ArrayView1<S>) -> S {
        Self::horner(&self.coeffs, x[0])
    }

    fn gradient(&self, x: ArrayView1<S>) -> Array1<S> {
        Array1::from_elem(1, Self::horner(&self.derivative_coeffs(), x[0]))
    }

    fn lipschitz(&self) -> S {
        self.lipschitz
    }

    fn domain_box(&self) -> Option<&BoxDomain<S>> {
        Some(&self.domain)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn quadratic_value_and_gradient() {
        let f = Quadratic::<f64>::new(array![[2.0, 0.0], [0.0, 4.0]], array![1.0, 1.0]).unwrap();
        // ½(2·1 + 4·1) − 2 = 1
        assert_eq!(f.value(array![1.0, 1.0].view()), 1.0);
        assert_eq!(f.gradient(array![1.0, 1.0].view()), array![1.0, 3.0]);
        assert!((f.lipschitz() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn least_squares_matches_its_quadratic_form() {
        let a = array![[1.0_f64, 2.0], [0.0, 1.0], [3.0, -1.0]];
        let b = array![1.0, 0.5, -2.0];
        let f = LeastSquares::new(a, b.clone()).unwrap();
        let qf = f.quadratic_form().unwrap();
        let x = array![0.3, -0.7];
        let via_q = 0.5 * x.dot(&qf.q.dot(&x)) - qf.b.dot(&x) + 0.5 * b.dot(&b);
        assert!((f.value(x.view()) - via_q).abs() < 1e-14);
        let g = qf.q.dot(&x) - &qf.b;
        assert!((&f.gradient(x.view()) - &g).iter().all(|d| d.abs() < 1e-14));
    }

    #[test]
    fn polynomial_derivative() {
        // x³ − 2x + 1 → 3x² − 2
        let dom = BoxDomain::uniform(1, -2.0, 2.0).unwrap();
        let p = Polynomial1d::new(vec![1.0, -2.0, 0.0, 1.0], 12.0, dom).unwrap();
        assert_eq!(p.value(array![2.0].view()), 5.0);
        assert_eq!(p.gradient(array![2.0].view())[0], 10.0);
    }
}
