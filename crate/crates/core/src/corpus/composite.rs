//! Composite corpus families with closed-form or numerically polished
//! critical points.

use std::sync::Arc;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::{
    objective, soft_threshold, AnalyticOracles, BoxDomain, CompositeProblem, CriticalSet, IndicatorBox,
    LeastSquares, Mcp, NonsmoothTerm, Polynomial1d, Quadratic, SmoothTerm, Zero, L1,
};

/// `n` points evenly spaced on `[lo, hi]`; a single point is `lo`.
pub(crate) fn linspace(lo: f64, hi: f64, n: usize) -> Array1<f64> {
    if n == 1 {
        return Array1::from_elem(1, lo);
    }
    Array1::from_shape_fn(n, |i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
}

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let scale = (rows as f64).sqrt().recip();
    Array2::from_shape_fn((rows, cols), |_| {
        let z: f64 = StandardNormal.sample(rng);
        z * scale
    })
}

fn gaussian_vector(n: usize, rng: &mut ChaCha8Rng) -> Array1<f64> {
    Array1::from_shape_fn(n, |_| StandardNormal.sample(rng))
}

fn with_unique_minimizer(p: CompositeProblem<f64>, x_star: Array1<f64>) -> Result<CompositeProblem<f64>> {
    let f_star = objective(&p, x_star.view())?;
    Ok(p.with_oracles(AnalyticOracles {
        critical_points: Some(CriticalSet::single(x_star.clone())),
        solution_set: Some(CriticalSet::single(x_star)),
        optimal_value: Some(f_star),
        sublevel_project: None,
        subdiff_dist: None,
    }))
}

/// Projection onto the ellipsoid `{½Σ dᵢyᵢ² ≤ c}`: `yᵢ = xᵢ/(1 + τdᵢ)` with the
/// multiplier `τ ≥ 0` found by bisection.
pub(crate) fn ellipsoid_project(d: &Array1<f64>, x: ArrayView1<f64>, c: f64) -> Option<Array1<f64>> {
    let level = |tau: f64| {
        d.iter()
            .zip(x.iter())
            .map(|(&di, &xi)| {
                let y = xi / (1.0 + tau * di);
                0.5 * di * y * y
            })
            .sum::<f64>()
    };
    if c < 0.0 {
        return None;
    }
    if level(0.0) <= c {
        return Some(x.to_owned());
    }
    if c == 0.0 {
        return Some(Array1::zeros(x.len()));
    }
    let mut hi = 1.0;
    while level(hi) > c {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if level(mid) > c {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(Array1::from_shape_fn(x.len(), |i| x[i] / (1.0 + hi * d[i])))
}

/// `f = ½xᵀdiag(1, …, κ)x`, `g = 0`.
pub(crate) fn quad_sc(n: usize, kappa: f64) -> Result<CompositeProblem<f64>> {
    if n == 0 || !(kappa >= 1.0) {
        return Err(Error::InvalidArgument(format!("QUAD_SC needs n >= 1 and kappa >= 1, got ({n}, {kappa})")));
    }
    let d = linspace(1.0, kappa, n);
    let f = Quadratic::diagonal(d.clone(), Array1::zeros(n))?;
    let zero = Array1::zeros(n);
    Ok(CompositeProblem::new(f, Zero).with_oracles(AnalyticOracles {
        critical_points: Some(CriticalSet::single(zero.clone())),
        solution_set: Some(CriticalSet::single(zero)),
        optimal_value: Some(0.0),
        sublevel_project: Some(Arc::new(move |x: ArrayView1<f64>, c: f64| ellipsoid_project(&d, x, c))),
        subdiff_dist: None,
    }))
}

/// Diagonal `D = diag(linspace(1, 4))` and the alternating vector
/// `bᵢ = ½(i+1)(−1)ⁱ`.
fn diagonal_data(n: usize) -> (Array1<f64>, Array1<f64>) {
    let d = linspace(1.0, 4.0, n);
    let b = Array1::from_shape_fn(n, |i| 0.5 * (i + 1) as f64 * if i % 2 == 0 { 1.0 } else { -1.0 });
    (d, b)
}

/// `f = ½xᵀDx − bᵀx`, `g = λ‖x‖₁`; `x*ᵢ = soft(bᵢ, λ)/dᵢ`.
pub(crate) fn quad_l1(n: usize, lambda: f64) -> Result<CompositeProblem<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("QUAD_L1 needs n >= 1".into()));
    }
    let (d, b) = diagonal_data(n);
    let x_star = Array1::from_shape_fn(n, |i| soft_threshold(b[i], lambda) / d[i]);
    let p = CompositeProblem::new(Quadratic::diagonal(d, b)?, L1::new(lambda)?);
    with_unique_minimizer(p, x_star)
}

/// `f = ½xᵀDx − bᵀx` with `b = 1`, `g = MCP(λ, b = 1/ρ)`, `min dᵢ > ρ`, so
/// each coordinate is strongly convex and `x*ᵢ = prox_{mcp/dᵢ}(bᵢ/dᵢ)`.
pub(crate) fn quad_mcp(n: usize, lambda: f64, rho: f64) -> Result<CompositeProblem<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("QUAD_MCP needs n >= 1".into()));
    }
    let d = linspace(1.0, 4.0, n);
    if !(rho < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "QUAD_MCP needs rho < min curvature 1, got {rho}"
        )));
    }
    let b = Array1::ones(n);
    let mcp = Mcp::from_rho(lambda, rho)?;
    let x_star = Array1::from_shape_fn(n, |i| mcp.prox_1d(b[i] / d[i], 1.0 / d[i]));
    let p = CompositeProblem::new(Quadratic::diagonal(d, b)?, mcp);
    with_unique_minimizer(p, x_star)
}

/// Proximal gradient to a tight tolerance, then an exact solve of the
/// optimality system on the detected support with signs.
pub(crate) fn lasso_solution(a: &Array2<f64>, b: &Array1<f64>, lambda: f64, lip: f64) -> Array1<f64> {
    let n = a.ncols();
    let step = lip.recip();
    let at = a.t();
    let mut x = Array1::zeros(n);
    for _ in 0..200_000 {
        let grad = at.dot(&(a.dot(&x) - b));
        let next = Array1::from_shape_fn(n, |i| soft_threshold(x[i] - step * grad[i], step * lambda));
        let moved = linalg::dist(next.view(), x.view());
        x = next;
        if moved <= 1e-13 {
            break;
        }
    }
    let support: Vec<usize> = (0..n).filter(|&i| x[i] != 0.0).collect();
    if support.is_empty() {
        return x;
    }
    let a_s = a.select(Axis(1), &support);
    let signs = Array1::from_iter(support.iter().map(|&i| x[i].signum()));
    let gram = a_s.t().dot(&a_s);
    let rhs = a_s.t().dot(b) - signs.mapv(|s| lambda * s);
    let Ok(factor) = linalg::cholesky(gram.view()) else {
        log::warn!("lasso polish: singular support Gram matrix, keeping the iterative solution");
        return x;
    };
    let x_s = linalg::cholesky_solve(factor.view(), rhs.view());
    let mut polished = Array1::zeros(n);
    for (k, &i) in support.iter().enumerate() {
        polished[i] = x_s[k];
    }
    let grad = at.dot(&(a.dot(&polished) - b));
    let signs_ok = support.iter().zip(x_s.iter()).all(|(&i, &v)| v.signum() == x[i].signum() && v != 0.0);
    let kkt_ok = (0..n)
        .filter(|i| !support.contains(i))
        .all(|i| grad[i].abs() <= lambda * (1.0 + 1e-9));
    if signs_ok && kkt_ok {
        polished
    } else {
        log::warn!("lasso polish: support check failed, keeping the iterative solution");
        x
    }
}

/// `f = ½‖Ax − b‖²` with seeded Gaussian `A` (scaled by `1/√m`) and `b`,
/// `g = λ‖x‖₁`.
pub(crate) fn lasso(m: usize, n: usize, lambda: f64, seed: u64) -> Result<CompositeProblem<f64>> {
    if m == 0 || n == 0 || !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("LASSO needs m, n >= 1 and lambda > 0, got ({m}, {n}, {lambda})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = gaussian_matrix(m, n, &mut rng);
    let b = gaussian_vector(m, &mut rng);
    let f = LeastSquares::new(a.clone(), b.clone())?;
    let x_star = lasso_solution(&a, &b, lambda, f.lipschitz());
    let p = CompositeProblem::new(f, L1::new(lambda)?);
    with_unique_minimizer(p, x_star)
}

/// `f = (4/9)(x⁴/4 − x³/3 − x²) + 5/27` on `[−2, 3]`: minima at −1 (value 0)
/// and 2 (value −1), local maximum at 0 (value 5/27).
pub(crate) fn two_well() -> Result<CompositeProblem<f64>> {
    let coeffs = vec![5.0 / 27.0, 0.0, -4.0 / 9.0, -4.0 / 27.0, 1.0 / 9.0];
    // |f''| = (4/9)|3x² − 2x − 2| peaks at x = 3.
    let f = Polynomial1d::new(coeffs, 76.0 / 9.0, BoxDomain::uniform(1, -2.0, 3.0)?)?;
    let points: Vec<Array1<f64>> = [-1.0, 0.0, 2.0].iter().map(|&v| Array1::from_elem(1, v)).collect();
    Ok(CompositeProblem::new(f, IndicatorBox::new(-2.0, 3.0)?).with_oracles(AnalyticOracles {
        critical_points: Some(CriticalSet::Points(points)),
        solution_set: Some(CriticalSet::single(Array1::from_elem(1, 2.0))),
        optimal_value: Some(-1.0),
        sublevel_project: None,
        subdiff_dist: None,
    }))
}

/// Block LASSO `½‖Ax − b‖² + λ‖x‖₁` with `A` of size `(n + 20) × n`.
pub(crate) fn jacobi_block(n: usize, seed: u64) -> Result<CompositeProblem<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("JACOBI_BLOCK needs n >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = n + 20;
    let a = gaussian_matrix(rows, n, &mut rng);
    let b = gaussian_vector(rows, &mut rng);
    let lambda = 0.1;
    let g: Arc<dyn NonsmoothTerm<f64>> = Arc::new(L1::new(lambda)?);
    let f = LeastSquares::new(a.clone(), b.clone())?;
    let x_star = lasso_solution(&a, &b, lambda, f.lipschitz());
    let f: Arc<dyn SmoothTerm<f64>> = Arc::new(f);
    with_unique_minimizer(CompositeProblem::from_arcs(f, g), x_star)
}
