//! Piecewise functions outside the `f + g` split: the two-dimensional cubic
//! seam function and the one-dimensional staircase.

use std::fmt;
use std::sync::Arc;

use ndarray::{array, Array1, ArrayView1};

use crate::error::{check_dim, Error, Result};
use crate::problem::{AnalyticOracles, CriticalSet, Objective};

type Eval = fn(ArrayView1<f64>) -> f64;
type Grad = fn(ArrayView1<f64>) -> Option<Array1<f64>>;

/// A function given piecewise, with its gradient off the seam set and an
/// explicit subgradient distance everywhere.
#[derive(Clone)]
pub struct RawFunction {
    name: &'static str,
    dim: usize,
    eval: Eval,
    grad: Grad,
    seam: fn(ArrayView1<f64>) -> bool,
    analytic: AnalyticOracles<f64>,
}

impl fmt::Debug for RawFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RawFunction")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("analytic", &self.analytic)
            .finish()
    }
}

impl RawFunction {
    pub fn name(&self) -> &'static str {
        self.name
    }

    /// Gradient of the smooth piece containing `x`; `None` on the seam.
    pub fn piecewise_grad(&self, x: ArrayView1<f64>) -> Option<Array1<f64>> {
        (!(self.seam)(x)).then(|| (self.grad)(x)).flatten()
    }

    pub fn on_seam(&self, x: ArrayView1<f64>) -> bool {
        (self.seam)(x)
    }

    pub fn eval(&self, x: ArrayView1<f64>) -> f64 {
        (self.eval)(x)
    }
}

impl Objective<f64> for RawFunction {
    fn dim(&self) -> usize {
        self.dim
    }

    fn objective(&self, x: ArrayView1<f64>) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        let v = (self.eval)(x);
        if v.is_nan() {
            return Err(Error::Numeric { term: self.name });
        }
        Ok(v)
    }

    fn subdiff_dist(&self, x: ArrayView1<f64>) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        let d = self
            .analytic
            .subdiff_dist
            .as_ref()
            .ok_or_else(|| Error::Capability(format!("subgradient distance for {}", self.name)))?;
        Ok(d(x))
    }

    fn oracles(&self) -> &AnalyticOracles<f64> {
        &self.analytic
    }
}

// ---------------------------------------------------------------------------
// F(x) = x₁² − x₂³ for x₂ > 0, x₂³ otherwise.

pub(crate) fn cubic_seam_value(x: ArrayView1<f64>) -> f64 {
    if x[1] > 0.0 {
        x[0] * x[0] - x[1].powi(3)
    } else {
        x[1].powi(3)
    }
}

fn cubic_seam_grad(x: ArrayView1<f64>) -> Option<Array1<f64>> {
    Some(if x[1] > 0.0 {
        array![2.0 * x[0], -3.0 * x[1] * x[1]]
    } else {
        array![0.0, 3.0 * x[1] * x[1]]
    })
}

fn cubic_seam_is_seam(x: ArrayView1<f64>) -> bool {
    x[1] == 0.0
}

/// On the seam `x₂ = 0` the proximal subdifferential is `{0} × [0, ∞)`: the
/// jump up to `x₁²` from above admits every upward slope, and `F` is flat
/// along the seam.
fn cubic_seam_subdiff(x: ArrayView1<f64>) -> f64 {
    if x[1] == 0.0 {
        0.0
    } else {
        let g = cubic_seam_grad(x).expect("off the seam");
        g.dot(&g).sqrt()
    }
}

/// Nearest point of `[F ≤ c]` for the cubic seam function.
///
/// The set is the half-plane `x₂ ≤ ∛min(c, 0)` together with the region
/// above the curve `x₂ = φ(x₁) = ∛max(x₁² − c, 0)`. The distance to the upper
/// part is `min_t (t − a)² + max(φ(t) − b, 0)²` over `t` between 0 and `a`,
/// found by a scan followed by golden-section refinement.
pub(crate) fn cubic_seam_sublevel_project(x: ArrayView1<f64>, c: f64) -> Option<Array1<f64>> {
    let (a, b) = (x[0], x[1]);
    if cubic_seam_value(x) <= c {
        return Some(x.to_owned());
    }
    let top = c.min(0.0).cbrt();
    let mut best = array![a, top];
    let mut best_d = (b - top).max(0.0);

    let phi = |t: f64| (t * t - c).max(0.0).cbrt();
    let cost = |t: f64| {
        let lift = (phi(t) - b).max(0.0);
        (t - a) * (t - a) + lift * lift
    };
    const SCAN: usize = 2000;
    let span = a.abs();
    let mut k_best = 0;
    let mut v_best = f64::INFINITY;
    for k in 0..=SCAN {
        let t = a.signum() * span * k as f64 / SCAN as f64;
        let v = cost(t);
        if v < v_best {
            v_best = v;
            k_best = k;
        }
    }
    let at = |k: usize| a.signum() * span * k as f64 / SCAN as f64;
    let (mut lo, mut hi) = (at(k_best.saturating_sub(1)), at((k_best + 1).min(SCAN)));
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi);
    }
    let t_star = golden_min(cost, lo, hi, at(k_best), v_best);
    let d_upper = cost(t_star).sqrt();
    if d_upper < best_d {
        best_d = d_upper;
        best = array![t_star, phi(t_star).max(b)];
    }
    debug_assert!(best_d.is_finite());
    Some(best)
}

/// Golden-section search on `[lo, hi]`, never returning worse than `(t0, v0)`.
fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, t0: f64, v0: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if (hi - lo).abs() <= 1e-16 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        }
    }
    let (t, v) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    if v <= v0 {
        t
    } else {
        t0
    }
}

pub(crate) fn cubic_seam(name: &'static str) -> RawFunction {
    // X̄_P is declared as the origin alone. Seam points away from it also
    // have 0 ∈ ∂F and are deliberately left out.
    let analytic = AnalyticOracles {
        critical_points: Some(CriticalSet::single(array![0.0, 0.0])),
        solution_set: None,
        optimal_value: None,
        sublevel_project: Some(Arc::new(cubic_seam_sublevel_project)),
        subdiff_dist: Some(Arc::new(cubic_seam_subdiff)),
    };
    RawFunction {
        name,
        dim: 2,
        eval: cubic_seam_value,
        grad: cubic_seam_grad,
        seam: cubic_seam_is_seam,
        analytic,
    }
}

/// Maximal sup-norm for which [`ex53_prox_reference`] is claimed.
pub const EX53_REGIME_RADIUS: f64 = 0.5;

/// `T_{D,1}(x) = (x₁, 0)` for the Euclidean kernel, valid near the origin
/// when `x₁ > 2x₂ > 0`. The function is unbounded below as `x₂ → −∞`, so the
/// mapping is a local one: the minimizer over a neighbourhood of `x`.
pub fn ex53_prox_reference(x: ArrayView1<f64>) -> Result<Array1<f64>> {
    check_dim(2, x.len())?;
    let near = x.iter().all(|v| v.abs() <= EX53_REGIME_RADIUS);
    if !(near && x[0] > 2.0 * x[1] && x[1] > 0.0) {
        return Err(Error::OutOfRegime(format!(
            "closed form needs |x|_inf <= {EX53_REGIME_RADIUS} and x1 > 2 x2 > 0, got ({}, {})",
            x[0], x[1]
        )));
    }
    Ok(array![x[0], 0.0])
}

/// Brute-force minimizer of `F(y) + ½‖y − x‖²` over the grid
/// `{x₁ + i·h} × {j·h}` with `|i|, |j| ≤ half_width/h`. The second axis is
/// anchored at 0 so that the seam is on the grid.
pub fn local_prox_grid(obj: &dyn Objective<f64>, x: ArrayView1<f64>, half_width: f64, h: f64) -> Result<Array1<f64>> {
    check_dim(2, obj.dim())?;
    check_dim(2, x.len())?;
    if !(h > 0.0) || !(half_width >= h) {
        return Err(Error::InvalidArgument(format!(
            "grid needs 0 < h <= half_width, got h={h}, half_width={half_width}"
        )));
    }
    let steps = (half_width / h).round() as i64;
    let centre2 = (x[1] / h).round() as i64;
    let mut best = (f64::INFINITY, x.to_owned());
    let mut y = Array1::zeros(2);
    for i in -steps..=steps {
        y[0] = x[0] + i as f64 * h;
        for j in (centre2 - steps)..=(centre2 + steps) {
            y[1] = j as f64 * h;
            let d0 = y[0] - x[0];
            let d1 = y[1] - x[1];
            let v = obj.objective(y.view())? + 0.5 * (d0 * d0 + d1 * d1);
            if v < best.0 {
                best = (v, y.clone());
            }
        }
    }
    Ok(best.1)
}

// ---------------------------------------------------------------------------
// Staircase: 0 for x ≤ 0, x² + 1/n − 1/n² on (1/n, 1/(n−1)] for n ≥ 3,
// x² + 1/4 for x > 1/2.

/// Index `n ≥ 2` of the piece containing `x > 0`; `n = 2` is `x > 1/2`.
fn staircase_piece(x: f64) -> u64 {
    if x > 0.5 {
        return 2;
    }
    let mut n = (1.0 / x).floor() as u64 + 1;
    n = n.max(3);
    while n > 3 && x > 1.0 / (n - 1) as f64 {
        n -= 1;
    }
    while x <= 1.0 / n as f64 {
        n += 1;
    }
    n
}

fn is_breakpoint(x: f64) -> bool {
    x > 0.0 && x <= 0.5 && x == 1.0 / (staircase_piece(x) - 1) as f64
}

pub fn staircase_value(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let n = staircase_piece(x) as f64;
    x * x + 1.0 / n - 1.0 / (n * n)
}

/// `dist(0, ∂F(x))`: 0 on `x ≤ 0`, `2x` elsewhere. At a breakpoint
/// `x = 1/(n−1)` the subdifferential is `[2x, ∞)`, whose nearest point to 0
/// is again `2x`.
pub fn staircase_subdiff_dist(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        2.0 * x
    }
}

/// Right end `s(c)` of `[F ≤ c] = (−∞, s(c)]`; `None` when the set is empty.
pub(crate) fn staircase_sublevel_sup(c: f64) -> Option<f64> {
    if c < 0.0 {
        return None;
    }
    if c == 0.0 {
        return Some(0.0);
    }
    // F increases with upward jumps; piece n has infimum 1/n (not attained).
    let n = ((1.0 / c).floor() as u64 + 1).max(2);
    let nf = n as f64;
    let shift = 1.0 / nf - 1.0 / (nf * nf);
    let inner = (c - shift).max(0.0).sqrt();
    Some(if n == 2 { inner } else { inner.min(1.0 / (nf - 1.0)) })
}

pub(crate) fn staircase() -> RawFunction {
    let project = |x: ArrayView1<f64>| array![x[0].min(0.0)];
    let near = |c: ArrayView1<f64>, delta: f64| {
        let hi = (c[0] + delta).min(0.0);
        let lo = c[0] - delta;
        if lo > hi {
            return Vec::new();
        }
        (0..=100)
            .map(|k| array![lo + (hi - lo) * k as f64 / 100.0])
            .collect()
    };
    let analytic = AnalyticOracles {
        critical_points: Some(CriticalSet::Set {
            description: "(-inf, 0]".into(),
            project: Arc::new(project),
            near: Arc::new(near),
        }),
        solution_set: Some(CriticalSet::Set {
            description: "(-inf, 0]".into(),
            project: Arc::new(project),
            near: Arc::new(near),
        }),
        optimal_value: Some(0.0),
        sublevel_project: Some(Arc::new(|x: ArrayView1<f64>, c: f64| {
            staircase_sublevel_sup(c).map(|s| array![x[0].min(s)])
        })),
        subdiff_dist: Some(Arc::new(|x: ArrayView1<f64>| staircase_subdiff_dist(x[0]))),
    };
    RawFunction {
        name: "staircase",
        dim: 1,
        eval: |x| staircase_value(x[0]),
        grad: |x| Some(array![if x[0] > 0.0 { 2.0 * x[0] } else { 0.0 }]),
        seam: |x| x[0] == 0.0 || is_breakpoint(x[0]),
        analytic,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cubic_seam_declares_only_the_origin() {
        let f = cubic_seam("ex_5_1");
        let set = f.analytic.critical_points.as_ref().unwrap();
        let x = array![0.7, 0.0];
        assert!((set.distance(x.view()) - 0.7).abs() < 1e-15);
        // Off the origin the seam is critical as well.
        assert_eq!(f.subdiff_dist(x.view()).unwrap(), 0.0);
    }

    #[test]
    fn cubic_seam_branches() {
        let f = cubic_seam("t");
        assert_eq!(f.eval(array![1.0, -1.0].view()), -1.0);
        assert_eq!(f.eval(array![1.0, 1.0].view()), 0.0);
        assert_eq!(f.eval(array![2.0, 1.0].view()), 3.0);
        assert!(f.piecewise_grad(array![3.0, 0.0].view()).is_none());
        assert_eq!(f.subdiff_dist(array![3.0, 0.0].view()).unwrap(), 0.0);
        assert_eq!(f.subdiff_dist(array![0.5, 0.5].view()).unwrap(), (1.0f64 + 0.5625).sqrt());
    }

    #[test]
    fn cubic_seam_is_lsc_across_the_seam() {
        // Approaching (a, 0) from above the values stay at least F(a, 0) = 0.
        let f = cubic_seam("t");
        for a in [-0.3, 0.1, 0.7] {
            let at = f.eval(array![a, 0.0].view());
            let liminf = (1..8)
                .map(|k| f.eval(array![a, 10f64.powi(-k)].view()))
                .fold(f64::INFINITY, f64::min);
            assert!(liminf >= at - 1e-12);
        }
    }

    #[test]
    fn sublevel_projection_examples() {
        // Inside: the point itself.
        let p = cubic_seam_sublevel_project(array![0.3, -0.1].view(), 0.0).unwrap();
        assert_eq!(p, array![0.3, -0.1]);
        // (0.1, 0.05): the half-plane is 0.05 away, the curve x₂ = |x₁|^{2/3}
        // passes closer.
        let x = array![0.1, 0.05];
        let p = cubic_seam_sublevel_project(x.view(), 0.0).unwrap();
        let d = ((p[0] - 0.1f64).powi(2) + (p[1] - 0.05f64).powi(2)).sqrt();
        assert!(d <= 0.05 + 1e-15);
        assert!(cubic_seam_value(p.view()) <= 1e-12);
        // Brute-force over the curve and the half-plane.
        let mut brute: f64 = 0.05;
        for k in 0..=200_000 {
            let t = -0.2 + 0.4 * k as f64 / 200_000.0;
            let y = (t * t).cbrt().max(0.05);
            brute = brute.min(((t - 0.1f64).powi(2) + (y - 0.05f64).powi(2)).sqrt());
        }
        assert!((d - brute).abs() < 1e-8, "{d} vs {brute}");
    }

    #[test]
    fn prox_reference_and_grid_agree() {
        let f = cubic_seam("t");
        assert_eq!(ex53_prox_reference(array![0.1, 0.04].view()).unwrap(), array![0.1, 0.0]);
        let x = array![0.2, 0.05];
        let t = ex53_prox_reference(x.view()).unwrap();
        let g = local_prox_grid(&f, x.view(), 0.1, 1e-3).unwrap();
        assert!(((g[0] - t[0]).powi(2) + (g[1] - t[1]).powi(2)).sqrt() <= 2e-3);
        assert!(matches!(
            ex53_prox_reference(array![0.1, 0.06].view()),
            Err(Error::OutOfRegime(_))
        ));
    }

    #[test]
    fn staircase_values() {
        assert!((staircase_value(0.7) - 0.74).abs() < 1e-15);
        assert_eq!(staircase_value(-1.0), 0.0);
        assert!((staircase_value(0.5) - (0.25 + 1.0 / 3.0 - 1.0 / 9.0)).abs() < 1e-15);
        assert_eq!(staircase_subdiff_dist(-1.0), 0.0);
        assert!((staircase_subdiff_dist(0.3) - 0.6).abs() < 1e-15);
        assert_eq!(staircase_subdiff_dist(0.5), 1.0);
        assert!(is_breakpoint(0.5) && is_breakpoint(1.0 / 3.0) && !is_breakpoint(0.3));
    }

    #[test]
    fn staircase_sublevel_edges() {
        assert_eq!(staircase_sublevel_sup(-0.1), None);
        assert_eq!(staircase_sublevel_sup(0.0), Some(0.0));
        // c in the gap above the n = 3 piece's maximum: right end 1/2.
        assert_eq!(staircase_sublevel_sup(0.49), Some(0.5));
        // c = 0.74 lands on the last piece at x = 0.7.
        assert!((staircase_sublevel_sup(0.74).unwrap() - 0.7).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn staircase_is_nondecreasing(a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(staircase_value(lo) <= staircase_value(hi));
        }

        #[test]
        fn staircase_sublevel_matches_values(c in 0.001f64..1.0, x in 0.0f64..1.0) {
            let s = staircase_sublevel_sup(c).unwrap();
            if x < s - 1e-12 {
                prop_assert!(staircase_value(x) <= c);
            } else if x > s + 1e-12 {
                prop_assert!(staircase_value(x) > c);
            }
        }

        #[test]
        fn cubic_projection_lands_in_the_set(a in -0.5f64..0.5, b in -0.5f64..0.5, c in -0.05f64..0.05) {
            let x = array![a, b];
            let p = cubic_seam_sublevel_project(x.view(), c).unwrap();
            prop_assert!(cubic_seam_value(p.view()) <= c + 1e-9);
        }
    }
}
