//! Small dense linear-algebra helpers. Dimensions in this library stay in the
//! hundreds, so plain O(n³) routines are adequate.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::Scalar;

pub fn norm<S: Scalar>(x: ArrayView1<S>) -> S {
    x.dot(&x).sqrt()
}

pub fn dist<S: Scalar>(x: ArrayView1<S>, y: ArrayView1<S>) -> S {
    x.iter()
        .zip(y.iter())
        .map(|(&a, &b)| (a - b) * (a - b))
        .fold(S::zero(), |acc, v| acc + v)
        .sqrt()
}

pub fn is_finite<S: Scalar>(x: ArrayView1<S>) -> bool {
    x.iter().all(|v| v.is_finite())
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn symmetric_eigenvalues<S: Scalar>(a: ArrayView2<S>) -> Result<Vec<S>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::InvalidArgument(format!(
            "matrix must be square, got {}x{}",
            n,
            a.ncols()
        )));
    }
    let scale = a.iter().fold(S::zero(), |m, v| m.max(v.abs()));
    let asym = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .fold(S::zero(), |m, (i, j)| m.max((a[[i, j]] - a[[j, i]]).abs()));
    if asym > S::lit(1e-12) * (S::one() + scale) {
        return Err(Error::InvalidArgument(format!(
            "matrix is not symmetric (max asymmetry {:e})",
            asym.as_f64()
        )));
    }
    let mut m = a.to_owned();
    let two = S::lit(2.0);
    for _sweep in 0..100 {
        let off: S = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[[i, j]] * m[[i, j]])
            .fold(S::zero(), |acc, v| acc + v);
        if off <= S::epsilon() * S::epsilon() * (S::one() + scale * scale) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                if apq == S::zero() {
                    continue;
                }
                let theta = (m[[q, q]] - m[[p, p]]) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + S::one()).sqrt());
                let c = S::one() / (t * t + S::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut eig: Vec<S> = (0..n).map(|i| m[[i, i]]).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
    Ok(eig)
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power iteration.
pub fn power_iteration<S: Scalar>(a: ArrayView2<S>, max_iters: usize, tol: S) -> S {
    let n = a.nrows();
    // Deterministic, non-degenerate start vector.
    let mut v = Array1::from_shape_fn(n, |i| S::one() + S::lit(i as f64 + 1.0).sqrt().recip());
    let nv = norm(v.view());
    v.mapv_inplace(|x| x / nv);
    let mut lambda = S::zero();
    for _ in 0..max_iters {
        let w = a.dot(&v);
        let nw = norm(w.view());
        if nw == S::zero() {
            return S::zero();
        }
        let next = v.dot(&w);
        v = w.mapv(|x| x / nw);
        if (next - lambda).abs() <= tol * next.abs().max(S::one()) {
            return next.max(lambda);
        }
        lambda = next;
    }
    lambda
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky<S: Scalar>(a: ArrayView2<S>) -> Result<Array2<S>> {
    let n = a.nrows();
    let mut l = Array2::<S>::zeros((n, n));
    for j in 0..n {
        let mut d = a[[j, j]];
        for k in 0..j {
            d -= l[[j, k]] * l[[j, k]];
        }
        if d <= S::zero() || !d.is_finite() {
            return Err(Error::InvalidArgument(
                "matrix is not positive definite".into(),
            ));
        }
        let djj = d.sqrt();
        l[[j, j]] = djj;
        for i in (j + 1)..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / djj;
        }
    }
    Ok(l)
}

/// Solves `L Lᵀ x = b` given the lower Cholesky factor.
pub fn cholesky_solve<S: Scalar>(l: ArrayView2<S>, b: ArrayView1<S>) -> Array1<S> {
    let n = l.nrows();
    let mut y = b.to_owned();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l[[i, k]] * y[k];
        }
        y[i] = s / l[[i, i]];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[[k, i]] * y[k];
        }
        y[i] = s / l[[i, i]];
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    proptest::proptest! {
        #[test]
        fn eigenvalues_match_nalgebra(entries in proptest::collection::vec(-5.0..5.0f64, 36)) {
            let m = ndarray::Array2::from_shape_vec((6, 6), entries).unwrap();
            let a = &m + &m.t();
            let ours = symmetric_eigenvalues(a.view()).unwrap();
            let na = nalgebra::DMatrix::from_fn(6, 6, |i, j| a[[i, j]]);
            let mut theirs: Vec<f64> = na.symmetric_eigenvalues().iter().copied().collect();
            theirs.sort_by(f64::total_cmp);
            for (x, y) in ours.iter().zip(&theirs) {
                approx::assert_abs_diff_eq!(x, y, epsilon = 1e-9 * (1.0 + y.abs()));
            }
        }
    }

    #[test]
    fn jacobi_eigenvalues_of_2x2() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3.
        let a = array![[2.0_f64, 1.0], [1.0, 2.0]];
        let e = symmetric_eigenvalues(a.view()).unwrap();
        assert!((e[0] - 1.0).abs() < 1e-14);
        assert!((e[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_asymmetric() {
        let a = array![[2.0, 1.0], [0.0, 2.0]];
        assert!(symmetric_eigenvalues(a.view()).is_err());
    }

    #[test]
    fn power_iteration_matches_jacobi() {
        let a = array![[4.0_f64, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 1.0]];
        let e = symmetric_eigenvalues(a.view()).unwrap();
        let p = power_iteration(a.view(), 10_000, 1e-15);
        assert!((p - e[2]).abs() < 1e-10, "{p} vs {}", e[2]);
    }

    #[test]
    fn cholesky_roundtrip() {
        let a = array![[4.0, 2.0], [2.0, 3.0]];
        let l = cholesky(a.view()).unwrap();
        let x = cholesky_solve(l.view(), array![2.0, 1.0].view());
        let r = a.dot(&x) - array![2.0, 1.0];
        assert!(norm(r.view()) < 1e-14);
        assert!(cholesky(array![[1.0, 2.0], [2.0, 1.0]].view()).is_err());
    }
}
