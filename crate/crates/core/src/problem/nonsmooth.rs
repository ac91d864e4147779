use std::fmt::Debug;

use ndarray::{Array1, ArrayView1, Zip};

use crate::error::{Error, Result};
use crate::Scalar;

/// Lower semicontinuous part `g` of the composite objective.
pub trait NonsmoothTerm<S: Scalar>: Debug + Send + Sync {
    /// Value of `g`, `+∞` outside its domain.
    fn value(&self, x: ArrayView1<S>) -> S;

    /// Solves `min_y ⟨shift, y⟩ + g(y) + ½ Σᵢ wᵢ (yᵢ − centerᵢ)²` exactly.
    fn scaled_prox(&self, center: ArrayView1<S>, shift: ArrayView1<S>, weights: ArrayView1<S>)
        -> Array1<S>;

    /// Modulus ρ such that `g + ρ/2‖·‖²` is convex, when known.
    fn semiconvex_rho(&self) -> Option<S>;

    /// `dist(0, ∂_P g(x) + shift)`, `+∞` outside the domain.
    fn min_norm_subgrad(&self, x: ArrayView1<S>, shift: ArrayView1<S>) -> Option<S>;

    /// True when `g(x) = Σᵢ gᵢ(xᵢ)` with the same rule applied per coordinate, so
    /// the term can be applied to any block of coordinates.
    fn coordinate_separable(&self) -> bool {
        false
    }

    fn is_zero(&self) -> bool {
        false
    }
}

/// Applies a one-dimensional prox `(v, τ) ↦ argmin gᵢ(y) + (y−v)²/(2τ)` coordinatewise.
fn separable_prox<S: Scalar>(
    center: ArrayView1<S>,
    shift: ArrayView1<S>,
    weights: ArrayView1<S>,
    prox: impl Fn(S, S) -> S,
) -> Array1<S> {
    Zip::from(&center)
        .and(&shift)
        .and(&weights)
        .map_collect(|&c, &s, &w| prox(c - s / w, w.recip()))
}

fn euclid<S: Scalar>(it: impl Iterator<Item = S>) -> S {
    it.fold(S::zero(), |acc, v| acc + v * v).sqrt()
}

/// `g ≡ 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Zero;

impl<S: Scalar> NonsmoothTerm<S> for Zero {
    fn value(&self, _x: ArrayView1<S>) -> S {
        S::zero()
    }

    fn scaled_prox(&self, center: ArrayView1<S>, shift: ArrayView1<S>, weights: ArrayView1<S>)
        -> Array1<S> {
        separable_prox(center, shift, weights, |v, _| v)
    }

    fn semiconvex_rho(&self) -> Option<S> {
        Some(S::zero())
    }

    fn min_norm_subgrad(&self, _x: ArrayView1<S>, shift: ArrayView1<S>) -> Option<S> {
        Some(euclid(shift.iter().copied()))
    }

    fn coordinate_separable(&self) -> bool {
        true
    }

    fn is_zero(&self) -> bool {
        true
    }
}

/// `g(x) = λ‖x‖₁`.
#[derive(Debug, Clone, Copy)]
pub struct L1<S> {
    lambda: S,
}

impl<S: Scalar> L1<S> {
    pub fn new(lambda: S) -> Result<Self> {
        if !(lambda >= S::zero()) || !lambda.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "l1 weight must be finite and nonnegative, got {lambda}"
            )));
        }
        Ok(Self { lambda })
    }

    pub fn lambda(&self) -> S {
        self.lambda
    }
}

/// `sign(v)·max(|v| − τ, 0)`.
pub fn soft_threshold<S: Scalar>(v: S, tau: S) -> S {
    if v > tau {
        v - tau
    } else if v < -tau {
        v + tau
    } else {
        S::zero()
    }
}

impl<S: Scalar> NonsmoothTerm<S> for L1<S> {
    fn value(&self, x: ArrayView1<S>) -> S {
        self.lambda * x.iter().fold(S::zero(), |acc, v| acc + v.abs())
    }

    fn scaled_prox(&self, center: ArrayView1<S>, shift: ArrayView1<S>, weights: ArrayView1<S>)
        -> Array1<S> {
        separable_prox(center, shift, weights, |v, tau| {
            soft_threshold(v, self.lambda * tau)
        })
    }

    fn semiconvex_rho(&self) -> Option<S> {
        Some(S::zero())
    }

    fn min_norm_subgrad(&self, x: ArrayView1<S>, shift: ArrayView1<S>) -> Option<S> {
        let lam = self.lambda;
        Some(euclid(x.iter().zip(shift.iter()).map(|(&t, &s)| {
            if t == S::zero() {
                (s.abs() - lam).max(S::zero())
            } else {
                (s + lam * t.signum()).abs()
            }
        })))
    }

    fn coordinate_separable(&self) -> bool {
        true
    }
}

/// Indicator of the box `[lo, hi]ⁿ`.
#[derive(Debug, Clone, Copy)]
pub struct IndicatorBox<S> {
    lo: S,
    hi: S,
}

impl<S: Scalar> IndicatorBox<S> {
    pub fn new(lo: S, hi: S) -> Result<Self> {
        if !(lo <= hi) {
            return Err(Error::InvalidArgument(format!(
                "box bounds must satisfy lo <= hi, got [{lo}, {hi}]"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn bounds(&self) -> (S, S) {
        (self.lo, self.hi)
    }

    fn inside(&self, t: S) -> bool {
        t >= self.lo && t <= self.hi
    }
}

impl<S: Scalar> NonsmoothTerm<S> for IndicatorBox<S> {
    fn value(&self, x: ArrayView1<S>) -> S {
        if x.iter().all(|&t| self.inside(t)) {
            S::zero()
        } else {
            S::infinity()
        }
    }

    fn scaled_prox(&self, center: ArrayView1<S>, shift: ArrayView1<S>, weights: ArrayView1<S>)
        -> Array1<S> {
        separable_prox(center, shift, weights, |v, _| v.max(self.lo).min(self.hi))
    }

    fn semiconvex_rho(&self) -> Option<S> {
        Some(S::zero())
    }

    fn min_norm_subgrad(&self, x: ArrayView1<S>, shift: ArrayView1<S>) -> Option<S> {
        if !x.iter().all(|&t| self.inside(t)) {
            return Some(S::infinity());
        }
        Some(euclid(x.iter().zip(shift.iter()).map(|(&t, &s)| {
            match (t == self.lo, t == self.hi) {
                (true, true) => S::zero(),
                // normal cone (−∞, 0] at the lower face
                (true, false) => (-s).max(S::zero()),
                (false, true) => s.max(S::zero()),
                (false, false) => s.abs(),
            }
        })))
    }

    fn coordinate_separable(&self) -> bool {
        true
    }
}

/// Minimax concave penalty `Σᵢ mcp(xᵢ)` with
/// `mcp(t) = λ|t| − t²/(2b)` for `|t| ≤ λb` and `λ²b/2` otherwise.
/// Semiconvex with ρ = 1/b.
#[derive(Debug, Clone, Copy)]
pub struct Mcp<S> {
    lambda: S,
    b: S,
}

impl<S: Scalar> Mcp<S> {
    pub fn new(lambda: S, b: S) -> Result<Self> {
        if !(lambda >= S::zero()) || !(b > S::zero()) || !lambda.is_finite() || !b.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "mcp needs lambda >= 0 and b > 0, got lambda={lambda}, b={b}"
            )));
        }
        Ok(Self { lambda, b })
    }

    pub fn from_rho(lambda: S, rho: S) -> Result<Self> {
        if !(rho > S::zero()) {
            return Err(Error::InvalidArgument(format!("mcp needs rho > 0, got {rho}")));
        }
        Self::new(lambda, rho.recip())
    }

    pub fn lambda(&self) -> S {
        self.lambda
    }

    pub fn b(&self) -> S {
        self.b
    }

    pub fn penalty(&self, t: S) -> S {
        let a = t.abs();
        if a <= self.lambda * self.b {
            self.lambda * a - a * a / (S::lit(2.0) * self.b)
        } else {
            self.lambda * self.lambda * self.b / S::lit(2.0)
        }
    }

    /// Global minimizer of `mcp(y) + (y − v)²/(2τ)` by comparing the minimizers of
    /// each quadratic piece, valid for every τ > 0.
    pub fn prox_1d(&self, v: S, tau: S) -> S {
        let lb = self.lambda * self.b;
        let obj = |y: S| self.penalty(y) + (y - v) * (y - v) / (S::lit(2.0) * tau);
        let curvature = tau.recip() - self.b.recip();
        let mut candidates = [S::zero(); 6];
        let mut n = 0;
        let mut push = |y: S| {
            candidates[n] = y;
            n += 1;
        };
        push(S::zero());
        if curvature > S::zero() {
            let denom = S::one() - tau / self.b;
            push(((v - self.lambda * tau) / denom).max(S::zero()).min(lb));
            push(((v + self.lambda * tau) / denom).min(S::zero()).max(-lb));
        } else {
            push(lb);
            push(-lb);
        }
        push(if v >= lb {
            v
        } else {
            lb
        });
        push(if v <= -lb {
            v
        } else {
            -lb
        });
        let mut best = candidates[0];
        let mut best_val = obj(best);
        for &y in &candidates[1..n] {
            let val = obj(y);
            if val < best_val {
                best = y;
                best_val = val;
            }
        }
        best
    }
}

impl<S: Scalar> NonsmoothTerm<S> for Mcp<S> {
    fn value(&self, x: ArrayView1<S>) -> S {
        x.iter().fold(S::zero(), |acc, &t| acc + self.penalty(t))
    }

    fn scaled_prox(&self, center: ArrayView1<S>, shift: ArrayView1<S>, weights: ArrayView1<S>)
        -> Array1<S> {
        separable_prox(center, shift, weights, |v, tau| self.prox_1d(v, tau))
    }

    fn semiconvex_rho(&self) -> Option<S> {
        Some(self.b.recip())
    }

    fn min_norm_subgrad(&self, x: ArrayView1<S>, shift: ArrayView1<S>) -> Option<S> {
        let lb = self.lambda * self.b;
        Some(euclid(x.iter().zip(shift.iter()).map(|(&t, &s)| {
            let a = t.abs();
            if t == S::zero() {
                (s.abs() - self.lambda).max(S::zero())
            } else if a < lb {
                (s + t.signum() * (self.lambda - a / self.b)).abs()
            } else {
                s.abs()
            }
        })))
    }

    fn coordinate_separable(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn grid_argmin(obj: impl Fn(f64) -> f64, lo: f64, hi: f64, h: f64) -> f64 {
        let n = ((hi - lo) / h).round() as usize;
        (0..=n)
            .map(|i| lo + h * i as f64)
            .min_by(|a, b| obj(*a).partial_cmp(&obj(*b)).unwrap())
            .unwrap()
    }

    #[test]
    fn soft_threshold_values() {
        let g = L1::new(1.0).unwrap();
        let ones = array![1.0, 1.0];
        let y = g.scaled_prox(array![2.0, -0.5].view(), array![0.0, 0.0].view(), ones.view());
        assert_eq!(y, array![1.0, 0.0]);
    }

    #[test]
    fn shift_and_weights_enter_as_documented() {
        // min ⟨s,y⟩ + |y| + ½w(y−c)²  =  prox_{1/w}(c − s/w)
        let g = L1::new(1.0).unwrap();
        let y = g.scaled_prox(array![1.0].view(), array![-2.0].view(), array![4.0].view());
        // v = 1 + 0.5 = 1.5, τ = 0.25 → 1.25
        assert_eq!(y[0], 1.25);
    }

    #[test]
    fn box_prox_and_value() {
        let g = IndicatorBox::new(0.0, 1.0).unwrap();
        assert_eq!(g.value(array![-1.0].view()), f64::INFINITY);
        assert_eq!(g.value(array![0.5].view()), 0.0);
        let y = g.scaled_prox(array![1.5, -0.2].view(), array![0.0, 0.0].view(), array![1.0, 1.0].view());
        assert_eq!(y, array![1.0, 0.0]);
        // at the lower face a positive shift is balanced by the normal cone
        assert_eq!(g.min_norm_subgrad(array![0.0].view(), array![3.0].view()), Some(0.0));
        assert_eq!(g.min_norm_subgrad(array![0.0].view(), array![-3.0].view()), Some(3.0));
    }

    #[test]
    fn mcp_prox_matches_piecewise_formula() {
        // τ < b: 0 if |v| ≤ λτ, v if |v| > λb, else sign(v)(|v| − λτ)/(1 − τ/b)
        let g = Mcp::new(1.0, 3.0).unwrap();
        let tau = 0.5;
        for &v in &[-4.0, -2.0, -0.3, 0.0, 0.4, 0.9, 2.5, 3.5] {
            let a: f64 = f64::abs(v);
            let expected = if a <= tau {
                0.0
            } else if a > 3.0 {
                v
            } else {
                v.signum() * (a - tau) / (1.0 - tau / 3.0)
            };
            assert!((g.prox_1d(v, tau) - expected).abs() < 1e-14, "v={v}");
        }
    }

    #[test]
    fn mcp_prox_is_global_minimizer_for_large_steps() {
        let g = Mcp::new(1.0, 0.5).unwrap();
        for &(v, tau) in &[(0.3, 2.0), (0.8, 1.0), (-0.6, 0.7), (2.0, 5.0)] {
            let y = g.prox_1d(v, tau);
            let obj = |t: f64| g.penalty(t) + (t - v) * (t - v) / (2.0 * tau);
            let grid = grid_argmin(obj, -3.0, 3.0, 1e-4);
            assert!(obj(y) <= obj(grid) + 1e-12, "v={v} tau={tau}: {y} vs {grid}");
        }
    }

    #[test]
    fn mcp_semiconvexity_modulus() {
        let g = Mcp::new(0.7, 2.0).unwrap();
        let h = |t: f64| g.penalty(t) + 0.25 * t * t;
        for i in -40..40 {
            let (x, y) = (i as f64 * 0.1, i as f64 * 0.1 + 0.37);
            assert!(h(0.5 * (x + y)) <= 0.5 * (h(x) + h(y)) + 1e-14);
        }
    }

    #[test]
    fn l1_subgradient_distance() {
        let g = L1::new(1.0).unwrap();
        // x=(0, 2), shift=(0.5, −3): (0, |−3+1|) → 2
        let d = g.min_norm_subgrad(array![0.0, 2.0].view(), array![0.5, -3.0].view()).unwrap();
        assert_eq!(d, 2.0);
    }
}
