use std::fmt::Debug;
use std::sync::Arc;

use ndarray::{Array1, Array2, ArrayView1};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::problem::BoxDomain;
use crate::Scalar;

/// User-supplied strongly convex generator `K` with Lipschitz gradient.
pub trait GeneralKernel<S: Scalar>: Debug + Send + Sync {
    fn value(&self, x: ArrayView1<S>) -> S;
    fn gradient(&self, x: ArrayView1<S>) -> Array1<S>;
}

#[derive(Debug, Clone)]
pub enum KernelKind<S: Scalar> {
    /// `K = ½‖x‖²`.
    Euclidean,
    /// `K = ½ Σ wᵢ xᵢ²`.
    Diagonal(Array1<S>),
    /// `K = ½ xᵀHx` with `H` symmetric positive definite.
    Spd(Array2<S>),
    General(Arc<dyn GeneralKernel<S>>),
}

/// Kernel `K` together with moduli `m‖x−y‖² ≤ ⟨∇K(x)−∇K(y), x−y⟩ ≤ M‖x−y‖²`.
#[derive(Debug, Clone)]
pub struct BregmanKernel<S: Scalar> {
    kind: KernelKind<S>,
    m: S,
    big_m: S,
}

/// Largest SPD dimension audited exactly at construction.
const SPD_AUDIT_MAX_DIM: usize = 200;

impl<S: Scalar> BregmanKernel<S> {
    pub fn euclidean() -> Self {
        Self {
            kind: KernelKind::Euclidean,
            m: S::one(),
            big_m: S::one(),
        }
    }

    pub fn diagonal(weights: Array1<S>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| !(*w > S::zero()) || !w.is_finite()) {
            return Err(Error::InvalidArgument(
                "diagonal kernel weights must be finite and positive".into(),
            ));
        }
        let m = weights.iter().fold(S::infinity(), |a, &w| a.min(w));
        let big_m = weights.iter().fold(S::zero(), |a, &w| a.max(w));
        Ok(Self {
            kind: KernelKind::Diagonal(weights),
            m,
            big_m,
        })
    }

    /// `K = (c/2)‖x‖²` in dimension `n`.
    pub fn scaled_euclidean(n: usize, c: S) -> Result<Self> {
        Self::diagonal(Array1::from_elem(n, c))
    }

    /// SPD kernel with moduli taken from the exact spectrum.
    pub fn spd(matrix: Array2<S>) -> Result<Self> {
        let eig = linalg::symmetric_eigenvalues(matrix.view())?;
        let (m, big_m) = (eig[0], eig[eig.len() - 1]);
        if !(m > S::zero()) {
            return Err(Error::InvalidArgument(format!(
                "kernel matrix is not positive definite (smallest eigenvalue {m})"
            )));
        }
        Ok(Self {
            kind: KernelKind::Spd(matrix),
            m,
            big_m,
        })
    }

    /// SPD kernel with declared moduli, audited against the spectrum when `n ≤ 200`.
    pub fn spd_with_bounds(matrix: Array2<S>, m: S, big_m: S) -> Result<Self> {
        check_dim(matrix.nrows(), matrix.ncols())?;
        if !(m > S::zero()) || !(big_m >= m) {
            return Err(Error::InvalidArgument(format!(
                "kernel moduli need 0 < m <= M, got m={m}, M={big_m}"
            )));
        }
        if matrix.nrows() <= SPD_AUDIT_MAX_DIM {
            let eig = linalg::symmetric_eigenvalues(matrix.view())?;
            let slack = S::lit(1e-12) * (S::one() + big_m);
            if eig[0] < m - slack || eig[eig.len() - 1] > big_m + slack {
                return Err(Error::InvalidArgument(format!(
                    "declared moduli [{m}, {big_m}] do not bracket the spectrum [{}, {}]",
                    eig[0],
                    eig[eig.len() - 1]
                )));
            }
        }
        Ok(Self {
            kind: KernelKind::Spd(matrix),
            m,
            big_m,
        })
    }

    /// General kernel; call [`audit_kernel`] to check the declared moduli.
    pub fn general(k: Arc<dyn GeneralKernel<S>>, m: S, big_m: S) -> Result<Self> {
        if !(m > S::zero()) || !(big_m >= m) {
            return Err(Error::InvalidArgument(format!(
                "kernel moduli need 0 < m <= M, got m={m}, M={big_m}"
            )));
        }
        Ok(Self {
            kind: KernelKind::General(k),
            m,
            big_m,
        })
    }

    pub fn kind(&self) -> &KernelKind<S> {
        &self.kind
    }

    pub fn m(&self) -> S {
        self.m
    }

    pub fn big_m(&self) -> S {
        self.big_m
    }

    /// Dimension the kernel is tied to, if any.
    pub fn dim(&self) -> Option<usize> {
        match &self.kind {
            KernelKind::Diagonal(w) => Some(w.len()),
            KernelKind::Spd(h) => Some(h.nrows()),
            _ => None,
        }
    }

    fn check_point(&self, n: usize) -> Result<()> {
        match self.dim() {
            Some(d) => check_dim(d, n),
            None => Ok(()),
        }
    }

    /// Weights of a diagonal quadratic kernel in dimension `n`.
    pub fn diagonal_weights(&self, n: usize) -> Option<Array1<S>> {
        match &self.kind {
            KernelKind::Euclidean => Some(Array1::ones(n)),
            KernelKind::Diagonal(w) => Some(w.clone()),
            _ => None,
        }
    }

    pub fn value(&self, x: ArrayView1<S>) -> Result<S> {
        self.check_point(x.len())?;
        let half = S::lit(0.5);
        Ok(match &self.kind {
            KernelKind::Euclidean => half * x.dot(&x),
            KernelKind::Diagonal(w) => half * x.iter().zip(w.iter()).fold(S::zero(), |a, (&v, &w)| a + w * v * v),
            KernelKind::Spd(h) => half * x.dot(&h.dot(&x)),
            KernelKind::General(k) => k.value(x),
        })
    }

    pub fn gradient(&self, x: ArrayView1<S>) -> Result<Array1<S>> {
        self.check_point(x.len())?;
        Ok(match &self.kind {
            KernelKind::Euclidean => x.to_owned(),
            KernelKind::Diagonal(w) => &x * w,
            KernelKind::Spd(h) => h.dot(&x),
            KernelKind::General(k) => k.gradient(x),
        })
    }

    /// `∇K(y) − ∇K(x)`, computed without cancellation for quadratic kernels.
    pub(crate) fn gradient_difference(&self, x: ArrayView1<S>, y: ArrayView1<S>) -> Result<Array1<S>> {
        let d = &y - &x;
        Ok(match &self.kind {
            KernelKind::Euclidean => d,
            KernelKind::Diagonal(w) => d * w,
            KernelKind::Spd(h) => h.dot(&d),
            KernelKind::General(k) => k.gradient(y) - k.gradient(x),
        })
    }
}

/// `D(x, y) = K(y) − K(x) − ⟨∇K(x), y − x⟩`.
pub fn bregman_distance<S: Scalar>(kernel: &BregmanKernel<S>, x: ArrayView1<S>, y: ArrayView1<S>) -> Result<S> {
    check_dim(x.len(), y.len())?;
    kernel.check_point(x.len())?;
    let half = S::lit(0.5);
    let d = &y - &x;
    Ok(match &kernel.kind {
        KernelKind::Euclidean => half * d.dot(&d),
        KernelKind::Diagonal(w) => half * d.iter().zip(w.iter()).fold(S::zero(), |a, (&v, &w)| a + w * v * v),
        KernelKind::Spd(h) => half * d.dot(&h.dot(&d)),
        KernelKind::General(k) => {
            let v = k.value(y) - k.value(x) - k.gradient(x).dot(&d);
            v.max(S::zero())
        }
    })
}

/// Sampled pair violating the declared kernel moduli.
#[derive(Debug, Clone)]
pub struct KernelViolation<S> {
    pub x: Array1<S>,
    pub y: Array1<S>,
    pub curvature: S,
}

/// Checks `m ≤ ⟨∇K(x)−∇K(y), x−y⟩/‖x−y‖² ≤ M` on random pairs from `bx`.
pub fn audit_kernel<S: Scalar>(
    kernel: &BregmanKernel<S>,
    bx: &BoxDomain<S>,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<KernelViolation<S>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = Vec::new();
    for _ in 0..n_samples {
        let x = bx.sample(&mut rng);
        let y = bx.sample(&mut rng);
        let d = &x - &y;
        let nn = d.dot(&d);
        if nn == S::zero() {
            continue;
        }
        let curvature = kernel.gradient_difference(y.view(), x.view())?.dot(&d) / nn;
        let tol = S::lit(1e-9) * (S::one() + kernel.big_m);
        if curvature < kernel.m - tol || curvature > kernel.big_m + tol {
            bad.push(KernelViolation { x, y, curvature });
        }
    }
    Ok(bad)
}

/// JSON form: `{"kind": "euclidean"}`, `{"kind": "diagonal", "weights": [...]}`,
/// `{"kind": "spd", "matrix": [[...]]}`.
#[derive(Debug, Clone, Deserialize, serde::Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    Euclidean,
    Diagonal { weights: Vec<f64> },
    Spd { matrix: Vec<Vec<f64>> },
}

impl KernelSpec {
    pub fn build(&self) -> Result<BregmanKernel<f64>> {
        match self {
            Self::Euclidean => Ok(BregmanKernel::euclidean()),
            Self::Diagonal { weights } => BregmanKernel::diagonal(Array1::from_vec(weights.clone())),
            Self::Spd { matrix } => BregmanKernel::spd(crate::problem::spec::matrix(matrix, "matrix")?),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn distance_examples() {
        let e = BregmanKernel::<f64>::euclidean();
        assert_eq!(bregman_distance(&e, array![3.0, 4.0].view(), array![3.0, 4.0].view()).unwrap(), 0.0);
        assert_eq!(bregman_distance(&e, array![1.0, 0.0].view(), array![0.0, 1.0].view()).unwrap(), 1.0);
        let d = BregmanKernel::diagonal(array![2.0, 1.0]).unwrap();
        assert_eq!(bregman_distance(&d, array![1.0, 0.0].view(), array![0.0, 1.0].view()).unwrap(), 1.5);
        assert_eq!((d.m(), d.big_m()), (1.0, 2.0));
    }

    #[test]
    fn dimension_mismatch() {
        let e = BregmanKernel::<f64>::euclidean();
        assert!(matches!(
            bregman_distance(&e, array![1.0].view(), array![0.0, 1.0].view()),
            Err(Error::Dimension { .. })
        ));
        let d = BregmanKernel::diagonal(array![2.0, 1.0]).unwrap();
        assert!(bregman_distance(&d, array![1.0].view(), array![0.0].view()).is_err());
    }

    #[test]
    fn spd_moduli_from_spectrum() {
        let k = BregmanKernel::<f64>::spd(array![[2.0, 1.0], [1.0, 2.0]]).unwrap();
        assert!((k.m() - 1.0).abs() < 1e-14 && (k.big_m() - 3.0).abs() < 1e-14);
        assert!(BregmanKernel::spd_with_bounds(array![[2.0, 1.0], [1.0, 2.0]], 1.5, 3.0).is_err());
        assert!(BregmanKernel::spd(array![[1.0, 2.0], [2.0, 1.0]]).is_err());
    }

    #[derive(Debug)]
    struct SoftQuartic;
    // ½‖x‖² + Σ (√(1+xᵢ²) − 1), curvature in [1, 2].
    impl GeneralKernel<f64> for SoftQuartic {
        fn value(&self, x: ArrayView1<f64>) -> f64 {
            x.iter().map(|v| 0.5 * v * v + ((1.0 + v * v).sqrt() - 1.0)).sum()
        }
        fn gradient(&self, x: ArrayView1<f64>) -> Array1<f64> {
            x.mapv(|v| v + v / (1.0 + v * v).sqrt())
        }
    }

    #[test]
    fn general_kernel_audit() {
        let bx = BoxDomain::uniform(2, -3.0, 3.0).unwrap();
        let ok = BregmanKernel::general(Arc::new(SoftQuartic), 1.0, 2.0).unwrap();
        assert!(audit_kernel(&ok, &bx, 500, 4).unwrap().is_empty());
        let bad = BregmanKernel::general(Arc::new(SoftQuartic), 1.5, 2.0).unwrap();
        assert!(!audit_kernel(&bad, &bx, 500, 4).unwrap().is_empty());
    }
}
