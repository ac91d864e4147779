//! Composite problems `F = f + g`, their oracles, and sample-based validation.

mod constants;
mod nonsmooth;
mod smooth;
pub mod spec;

use std::fmt;
use std::sync::Arc;

use ndarray::{Array1, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use constants::{derive_constants, Regime, SolverConstants};
pub use nonsmooth::{soft_threshold, IndicatorBox, Mcp, NonsmoothTerm, Zero, L1};
pub use smooth::{LeastSquares, Polynomial1d, Quadratic, QuadraticForm, SmoothTerm};

use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::Scalar;

/// Axis-aligned box `[lower, upper]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain<S> {
    lower: Array1<S>,
    upper: Array1<S>,
}

impl<S: Scalar> BoxDomain<S> {
    pub fn new(lower: Array1<S>, upper: Array1<S>) -> Result<Self> {
        check_dim(lower.len(), upper.len())?;
        if lower.is_empty() {
            return Err(Error::InvalidArgument("box must have dimension >= 1".into()));
        }
        if lower
            .iter()
            .zip(upper.iter())
            .any(|(l, u)| !(l <= u) || !l.is_finite() || !u.is_finite())
        {
            return Err(Error::InvalidArgument(
                "box bounds must be finite with lower <= upper".into(),
            ));
        }
        Ok(Self { lower, upper })
    }

    pub fn uniform(n: usize, lo: S, hi: S) -> Result<Self> {
        Self::new(Array1::from_elem(n, lo), Array1::from_elem(n, hi))
    }

    /// Box of half-width `radius` around `center`.
    pub fn around(center: ArrayView1<S>, radius: S) -> Result<Self> {
        Self::new(center.mapv(|c| c - radius), center.mapv(|c| c + radius))
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &Array1<S> {
        &self.lower
    }

    pub fn upper(&self) -> &Array1<S> {
        &self.upper
    }

    pub fn contains(&self, x: ArrayView1<S>) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(self.upper.iter()))
                .all(|(v, (l, u))| v >= l && v <= u)
    }

    /// Uniform sample from the box.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Array1<S> {
        Array1::from_shape_fn(self.dim(), |i| {
            let u: f64 = rng.random();
            self.lower[i] + (self.upper[i] - self.lower[i]) * S::lit(u)
        })
    }

    pub fn intersect(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        let lower = ndarray::Zip::from(&self.lower)
            .and(&other.lower)
            .map_collect(|&a, &b| a.max(b));
        let upper = ndarray::Zip::from(&self.upper)
            .and(&other.upper)
            .map_collect(|&a, &b| a.min(b));
        Self::new(lower, upper)
    }
}

pub type PointMap<S> = Arc<dyn Fn(ArrayView1<S>) -> Array1<S> + Send + Sync>;
pub type ScalarMap<S> = Arc<dyn Fn(ArrayView1<S>) -> S + Send + Sync>;
/// Projection onto `[F ≤ level]`; `None` when that set is empty.
pub type SublevelProjector<S> = Arc<dyn Fn(ArrayView1<S>, S) -> Option<Array1<S>> + Send + Sync>;
/// Representatives of a set within distance `δ` of a point.
pub type NearbyPoints<S> = Arc<dyn Fn(ArrayView1<S>, S) -> Vec<Array1<S>> + Send + Sync>;

/// Description of a set of proximal critical points (or of minimizers).
#[derive(Clone)]
pub enum CriticalSet<S> {
    Points(Vec<Array1<S>>),
    /// Infinite set given by a projection and an enumerator of representatives
    /// near a point (for instance a half-line discretized on a fine mesh).
    Set {
        description: String,
        project: PointMap<S>,
        near: NearbyPoints<S>,
    },
}

impl<S: Scalar> CriticalSet<S> {
    pub fn single(x: Array1<S>) -> Self {
        Self::Points(vec![x])
    }

    /// Nearest element of the set.
    pub fn project(&self, x: ArrayView1<S>) -> Option<Array1<S>> {
        match self {
            Self::Points(points) => points
                .iter()
                .min_by(|a, b| {
                    let da = linalg::dist(a.view(), x);
                    let db = linalg::dist(b.view(), x);
                    da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal)
                })
                .cloned(),
            Self::Set { project, .. } => Some(project(x)),
        }
    }

    pub fn distance(&self, x: ArrayView1<S>) -> S {
        self.project(x)
            .map(|p| linalg::dist(p.view(), x))
            .unwrap_or_else(S::infinity)
    }

    /// Elements (or representatives) within distance `delta` of `center`.
    pub fn within(&self, center: ArrayView1<S>, delta: S) -> Vec<Array1<S>> {
        match self {
            Self::Points(points) => points
                .iter()
                .filter(|p| linalg::dist(p.view(), center) <= delta)
                .cloned()
                .collect(),
            Self::Set { near, .. } => near(center, delta),
        }
    }
}

impl<S: Scalar> fmt::Debug for CriticalSet<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Points(p) => f.debug_tuple("Points").field(p).finish(),
            Self::Set { description, .. } => f.debug_tuple("Set").field(description).finish(),
        }
    }
}

/// Closed-form knowledge about a problem, used by the diagnostics.
#[derive(Clone)]
pub struct AnalyticOracles<S> {
    /// Proximal critical points X̄_P.
    pub critical_points: Option<CriticalSet<S>>,
    /// Global minimizers X*.
    pub solution_set: Option<CriticalSet<S>>,
    pub optimal_value: Option<S>,
    pub sublevel_project: Option<SublevelProjector<S>>,
    /// Overrides the subgradient distance assembled from `∇f` and `g`.
    pub subdiff_dist: Option<ScalarMap<S>>,
}

impl<S> Default for AnalyticOracles<S> {
    fn default() -> Self {
        Self {
            critical_points: None,
            solution_set: None,
            optimal_value: None,
            sublevel_project: None,
            subdiff_dist: None,
        }
    }
}

impl<S: Scalar> fmt::Debug for AnalyticOracles<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalyticOracles")
            .field("critical_points", &self.critical_points)
            .field("solution_set", &self.solution_set)
            .field("optimal_value", &self.optimal_value)
            .field("sublevel_project", &self.sublevel_project.is_some())
            .field("subdiff_dist", &self.subdiff_dist.is_some())
            .finish()
    }
}

/// Anything the diagnostics can evaluate: composite problems and raw
/// piecewise functions alike.
pub trait Objective<S: Scalar>: Send + Sync {
    fn dim(&self) -> usize;
    /// `F(x)`, `+∞` outside the domain.
    fn objective(&self, x: ArrayView1<S>) -> Result<S>;
    /// `dist(0, ∂_P F(x))`.
    fn subdiff_dist(&self, x: ArrayView1<S>) -> Result<S>;
    fn oracles(&self) -> &AnalyticOracles<S>;
}

/// `F = f + g` with optional analytic oracles.
#[derive(Clone)]
pub struct CompositeProblem<S: Scalar> {
    f: Arc<dyn SmoothTerm<S>>,
    g: Arc<dyn NonsmoothTerm<S>>,
    analytic: AnalyticOracles<S>,
}

impl<S: Scalar> fmt::Debug for CompositeProblem<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CompositeProblem")
            .field("f", &self.f)
            .field("g", &self.g)
            .field("analytic", &self.analytic)
            .finish()
    }
}

impl<S: Scalar> CompositeProblem<S> {
    pub fn new(f: impl SmoothTerm<S> + 'static, g: impl NonsmoothTerm<S> + 'static) -> Self {
        Self::from_arcs(Arc::new(f), Arc::new(g))
    }

    pub fn from_arcs(f: Arc<dyn SmoothTerm<S>>, g: Arc<dyn NonsmoothTerm<S>>) -> Self {
        Self {
            f,
            g,
            analytic: AnalyticOracles::default(),
        }
    }

    pub fn with_oracles(mut self, analytic: AnalyticOracles<S>) -> Self {
        self.analytic = analytic;
        self
    }

    pub fn f(&self) -> &dyn SmoothTerm<S> {
        self.f.as_ref()
    }

    pub fn g(&self) -> &dyn NonsmoothTerm<S> {
        self.g.as_ref()
    }

    pub fn f_arc(&self) -> Arc<dyn SmoothTerm<S>> {
        Arc::clone(&self.f)
    }

    pub fn g_arc(&self) -> Arc<dyn NonsmoothTerm<S>> {
        Arc::clone(&self.g)
    }

    pub fn analytic(&self) -> &AnalyticOracles<S> {
        &self.analytic
    }

    pub fn analytic_mut(&mut self) -> &mut AnalyticOracles<S> {
        &mut self.analytic
    }

    pub fn lipschitz(&self) -> S {
        self.f.lipschitz()
    }

    pub fn rho(&self) -> Option<S> {
        self.g.semiconvex_rho()
    }

    /// Replaces the smooth term, keeping `g` and the oracles.
    pub fn with_smooth(mut self, f: Arc<dyn SmoothTerm<S>>) -> Self {
        self.f = f;
        self
    }

    /// `∇f(x)`, refusing to produce non-finite entries.
    pub fn gradient(&self, x: ArrayView1<S>) -> Result<Array1<S>> {
        check_dim(self.f.dim(), x.len())?;
        let g = self.f.gradient(x);
        if !linalg::is_finite(g.view()) {
            return Err(Error::Domain {
                term: "grad f",
                point: x.iter().map(|v| v.as_f64()).collect(),
            });
        }
        Ok(g)
    }
}

/// `F(x) = f(x) + g(x)`; `+∞` when `x ∉ dom g`.
pub fn objective<S: Scalar>(p: &CompositeProblem<S>, x: ArrayView1<S>) -> Result<S> {
    check_dim(p.f.dim(), x.len())?;
    if !linalg::is_finite(x) {
        return Err(Error::InvalidArgument("point has non-finite entries".into()));
    }
    let fv = p.f.value(x);
    if fv.is_nan() {
        return Err(Error::Numeric { term: "f" });
    }
    let gv = p.g.value(x);
    if gv.is_nan() {
        return Err(Error::Numeric { term: "g" });
    }
    Ok(fv + gv)
}

impl<S: Scalar> Objective<S> for CompositeProblem<S> {
    fn dim(&self) -> usize {
        self.f.dim()
    }

    fn objective(&self, x: ArrayView1<S>) -> Result<S> {
        objective(self, x)
    }

    fn subdiff_dist(&self, x: ArrayView1<S>) -> Result<S> {
        check_dim(self.f.dim(), x.len())?;
        if let Some(d) = &self.analytic.subdiff_dist {
            return Ok(d(x));
        }
        let grad = self.gradient(x)?;
        self.g
            .min_norm_subgrad(x, grad.view())
            .ok_or_else(|| Error::Capability("subgradient distance oracle for g".into()))
    }

    fn oracles(&self) -> &AnalyticOracles<S> {
        &self.analytic
    }
}

/// Which sampled inequality failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Lipschitz,
    Descent,
    Semiconvexity,
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub n_pairs: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn to_vec<S: Scalar>(x: ArrayView1<S>) -> Vec<f64> {
    x.iter().map(|v| v.as_f64()).collect()
}

/// Audits the declared Lipschitz constant, the descent lemma and (when ρ is
/// declared) midpoint semiconvexity of `g` on `n_samples` random pairs in `bx`.
pub fn validate_problem<S: Scalar>(
    p: &CompositeProblem<S>,
    bx: &BoxDomain<S>,
    n_samples: usize,
    seed: u64,
) -> Result<ValidationReport> {
    check_dim(p.f.dim(), bx.dim())?;
    if n_samples < 2 {
        return Err(Error::InvalidArgument("n_samples must be at least 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lip = p.lipschitz();
    let half = S::lit(0.5);
    let tol = |scale: S| S::lit(1e-9) * (S::one() + scale);
    let rho = p.rho();
    let mut violations = Vec::new();
    for _ in 0..n_samples {
        let x = bx.sample(&mut rng);
        let y = bx.sample(&mut rng);
        let (fx, fy) = (p.f.value(x.view()), p.f.value(y.view()));
        let (gx, gy) = (p.f.gradient(x.view()), p.f.gradient(y.view()));
        for (v, pt) in [(fx, &x), (fy, &y)] {
            if !v.is_finite() {
                return Err(Error::Domain {
                    term: "f",
                    point: to_vec(pt.view()),
                });
            }
        }
        if !linalg::is_finite(gx.view()) || !linalg::is_finite(gy.view()) {
            return Err(Error::Domain {
                term: "grad f",
                point: to_vec(x.view()),
            });
        }
        let dxy = linalg::dist(x.view(), y.view());
        let dg = linalg::dist(gx.view(), gy.view());
        if dg > lip * dxy + tol(dg.max(lip * dxy)) {
            violations.push(Violation {
                kind: ViolationKind::Lipschitz,
                x: to_vec(x.view()),
                y: to_vec(y.view()),
                lhs: dg.as_f64(),
                rhs: (lip * dxy).as_f64(),
            });
        }
        let d = &y - &x;
        let upper = fx + gx.dot(&d) + half * lip * dxy * dxy;
        if fy > upper + tol(fy.abs().max(upper.abs())) {
            violations.push(Violation {
                kind: ViolationKind::Descent,
                x: to_vec(x.view()),
                y: to_vec(y.view()),
                lhs: fy.as_f64(),
                rhs: upper.as_f64(),
            });
        }
        if let Some(rho) = rho {
            let h = |z: ArrayView1<S>| p.g.value(z) + half * rho * z.dot(&z);
            let (hx, hy) = (h(x.view()), h(y.view()));
            if !hx.is_finite() || !hy.is_finite() {
                return Err(Error::Domain {
                    term: "g",
                    point: to_vec(if hx.is_finite() { y.view() } else { x.view() }),
                });
            }
            let mid = (&x + &y).mapv(|v| v * half);
            let hm = h(mid.view());
            let avg = half * (hx + hy);
            if hm > avg + tol(hm.abs().max(avg.abs())) {
                violations.push(Violation {
                    kind: ViolationKind::Semiconvexity,
                    x: to_vec(x.view()),
                    y: to_vec(y.view()),
                    lhs: hm.as_f64(),
                    rhs: avg.as_f64(),
                });
            }
        }
    }
    Ok(ValidationReport {
        n_pairs: n_samples,
        violations,
    })
}

/// Checks that every listed critical point has zero subgradient distance.
/// Returns the offending points with their distance.
pub fn critical_point_consistency<S: Scalar>(
    obj: &dyn Objective<S>,
    tol: S,
) -> Result<Vec<(Array1<S>, S)>> {
    let Some(CriticalSet::Points(points)) = &obj.oracles().critical_points else {
        return Ok(Vec::new());
    };
    let mut bad = Vec::new();
    for p in points {
        let d = obj.subdiff_dist(p.view())?;
        if d > tol {
            bad.push((p.clone(), d));
        }
    }
    Ok(bad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn half_norm_sq(l: f64) -> CompositeProblem<f64> {
        let f = Quadratic::with_lipschitz(Array2::eye(2), Array1::zeros(2), l).unwrap();
        CompositeProblem::new(f, Zero)
    }

    #[test]
    fn objective_examples() {
        let f = Quadratic::diagonal(array![1.0, 1.0], Array1::zeros(2)).unwrap();
        let p = CompositeProblem::new(f, L1::new(1.0).unwrap());
        assert_eq!(objective(&p, array![1.0, -2.0].view()).unwrap(), 5.5);
        assert_eq!(objective(&p, array![0.0, 0.0].view()).unwrap(), 0.0);

        let f = Quadratic::diagonal(array![1.0], Array1::zeros(1)).unwrap();
        let p = CompositeProblem::new(f, IndicatorBox::new(0.0, 1.0).unwrap());
        assert_eq!(objective(&p, array![-1.0].view()).unwrap(), f64::INFINITY);
    }

    #[test]
    fn nan_is_attributed_to_its_term() {
        #[derive(Debug)]
        struct NanG;
        impl NonsmoothTerm<f64> for NanG {
            fn value(&self, _x: ArrayView1<f64>) -> f64 {
                f64::NAN
            }
            fn scaled_prox(
                &self,
                c: ArrayView1<f64>,
                _s: ArrayView1<f64>,
                _w: ArrayView1<f64>,
            ) -> Array1<f64> {
                c.to_owned()
            }
            fn semiconvex_rho(&self) -> Option<f64> {
                None
            }
            fn min_norm_subgrad(&self, _x: ArrayView1<f64>, _s: ArrayView1<f64>) -> Option<f64> {
                None
            }
        }
        let f = Quadratic::diagonal(array![1.0], Array1::zeros(1)).unwrap();
        let p = CompositeProblem::new(f, NanG);
        assert_eq!(
            objective(&p, array![0.0].view()),
            Err(Error::Numeric { term: "g" })
        );
    }

    #[test]
    fn validation_passes_with_exact_constant() {
        let p = half_norm_sq(1.0);
        let bx = BoxDomain::uniform(2, -1.0, 1.0).unwrap();
        assert!(validate_problem(&p, &bx, 100, 1).unwrap().passed());
    }

    #[test]
    fn validation_flags_understated_constant() {
        let p = half_norm_sq(0.5);
        let bx = BoxDomain::uniform(2, -1.0, 1.0).unwrap();
        let r = validate_problem(&p, &bx, 100, 1).unwrap();
        assert!(!r.passed());
        assert!(r
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::Lipschitz && v.lhs > v.rhs));
    }

    #[test]
    fn validation_reports_domain_errors() {
        let f = Quadratic::diagonal(array![1.0], Array1::zeros(1)).unwrap();
        let p = CompositeProblem::new(f, IndicatorBox::new(0.0, 1.0).unwrap());
        let bx = BoxDomain::uniform(1, -1.0, 1.0).unwrap();
        assert!(matches!(
            validate_problem(&p, &bx, 10, 3),
            Err(Error::Domain { term: "g", .. })
        ));
    }

    #[test]
    fn critical_set_projection() {
        let set = CriticalSet::Points(vec![array![0.0], array![2.0]]);
        assert_eq!(set.project(array![1.5].view()).unwrap(), array![2.0]);
        assert_eq!(set.within(array![0.5].view(), 1.0).len(), 1);
    }
}
