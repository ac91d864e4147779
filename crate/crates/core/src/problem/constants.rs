use serde::Serialize;

use crate::error::{Error, Result};
use crate::Scalar;

/// Constants entering the descent and error-bound inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConstants<S> {
    pub m: S,
    #[serde(rename = "M")]
    pub big_m: S,
    pub eps_lo: S,
    pub eps_hi: S,
    pub lipschitz: S,
    pub rho: Option<S>,
    /// `½(m/ε̄ − L)`, the sufficient-decrease coefficient at the largest step.
    pub a: S,
    pub frak_a: S,
    pub frak_b: S,
    pub frak_c: S,
    pub kappa: S,
    pub c0: S,
    pub regime: Regime,
}

/// Which step-size regime the constants fall into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Regime {
    /// `ε̄ ≥ m/L`: sufficient decrease is not guaranteed.
    NonDescent,
    /// `ε̄ < m/L` but `𝔠 ≤ 0`.
    Descent,
    /// `ε̄ < m/(L+2)`, so `𝔠 > 0` as well.
    Strict,
}

impl<S: Scalar> SolverConstants<S> {
    pub fn descent(&self) -> bool {
        self.regime != Regime::NonDescent
    }

    /// `½(m/ε − L)` for a particular step `ε`.
    pub fn a_at(&self, eps: S) -> S {
        S::lit(0.5) * (self.m / eps - self.lipschitz)
    }

    /// `L + M/ε̲`, the factor in the subgradient residual bound.
    pub fn residual_factor(&self) -> S {
        self.lipschitz + self.big_m / self.eps_lo
    }

    /// Errors unless `ε̄ < m/L`.
    pub fn require_descent(&self) -> Result<()> {
        if self.descent() {
            Ok(())
        } else {
            Err(Error::NonDescent {
                m: self.m.as_f64(),
                lipschitz: self.lipschitz.as_f64(),
                eps_hi: self.eps_hi.as_f64(),
                bound: (self.m / self.lipschitz).as_f64(),
                a: self.a.as_f64(),
            })
        }
    }

    /// `m − ε̄ρ`, requiring a declared ρ and `ε̄ < min{m/L, m/ρ}`.
    pub fn semiconvex_margin(&self) -> Result<S> {
        let rho = self.rho.ok_or_else(|| {
            Error::Regime("the semiconvexity modulus of g is not declared".into())
        })?;
        self.require_descent()
            .map_err(|e| Error::Regime(e.to_string()))?;
        let margin = self.m - self.eps_hi * rho;
        if margin <= S::zero() {
            return Err(Error::Regime(format!(
                "eps_hi={} is not below m/rho={}",
                self.eps_hi,
                self.m / rho
            )));
        }
        Ok(margin)
    }
}

/// Evaluates the constant list for kernel moduli `(m, M)`, step bounds
/// `[ε̲, ε̄]`, Lipschitz constant `L` and optional semiconvexity modulus `ρ`.
pub fn derive_constants<S: Scalar>(
    m: S,
    big_m: S,
    eps_lo: S,
    eps_hi: S,
    lipschitz: S,
    rho: Option<S>,
) -> Result<SolverConstants<S>> {
    let finite = [m, big_m, eps_lo, eps_hi, lipschitz]
        .iter()
        .all(|v| v.is_finite());
    if !finite || !(m > S::zero()) || !(big_m >= m) {
        return Err(Error::InvalidArgument(format!(
            "kernel moduli need 0 < m <= M, got m={m}, M={big_m}"
        )));
    }
    if !(eps_lo > S::zero()) || !(eps_lo <= eps_hi) {
        return Err(Error::InvalidArgument(format!(
            "step bounds need 0 < eps_lo <= eps_hi, got [{eps_lo}, {eps_hi}]"
        )));
    }
    if !(lipschitz >= S::zero()) {
        return Err(Error::InvalidArgument(format!(
            "lipschitz constant must be nonnegative, got {lipschitz}"
        )));
    }
    if let Some(r) = rho {
        if !(r >= S::zero()) || !r.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "semiconvexity modulus must be finite and nonnegative, got {r}"
            )));
        }
    }
    let two = S::lit(2.0);
    let three = S::lit(3.0);
    let a = S::lit(0.5) * (m / eps_hi - lipschitz);
    let frak_a = two;
    let frak_b = big_m / eps_lo + two + three * lipschitz;
    let frak_c = m / eps_hi - (lipschitz + two);
    let kappa = ((two * frak_b - S::one()) / frak_a).max((two * frak_b - frak_c) / frak_a);
    let c0 = S::lit(1.5) * lipschitz + big_m / (two * eps_lo);
    let regime = if a <= S::zero() {
        Regime::NonDescent
    } else if frak_c > S::zero() {
        Regime::Strict
    } else {
        Regime::Descent
    };
    Ok(SolverConstants {
        m,
        big_m,
        eps_lo,
        eps_hi,
        lipschitz,
        rho,
        a,
        frak_a,
        frak_b,
        frak_c,
        kappa,
        c0,
        regime,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_moduli_half_step() {
        let c = derive_constants(1.0, 1.0, 0.5, 0.5, 1.0, None).unwrap();
        assert_eq!(c.a, 0.5);
        assert_eq!(c.frak_b, 7.0);
        assert_eq!(c.frak_c, -1.0);
        assert_eq!(c.kappa, 7.5);
        assert_eq!(c.c0, 2.5);
        assert_eq!(c.regime, Regime::Descent);
    }

    #[test]
    fn small_step_is_strict() {
        let c = derive_constants(1.0_f64, 1.0, 0.1, 0.1, 1.0, None).unwrap();
        assert!((c.frak_c - 7.0).abs() < 1e-12);
        assert_eq!(c.regime, Regime::Strict);
    }

    #[test]
    fn gradient_free_smooth_term() {
        let c = derive_constants(1.0, 1.0, 1.0, 1.0, 0.0, None).unwrap();
        assert_eq!(c.a, 0.5);
    }

    #[test]
    fn boundary_step_is_non_descent() {
        let c = derive_constants(1.0, 1.0, 1.0, 1.0, 1.0, None).unwrap();
        assert_eq!(c.regime, Regime::NonDescent);
        assert!(c.require_descent().is_err());
    }

    #[test]
    fn rejects_bad_moduli() {
        assert!(derive_constants(0.0, 1.0, 0.1, 0.1, 1.0, None).is_err());
        assert!(derive_constants(2.0, 1.0, 0.1, 0.1, 1.0, None).is_err());
        assert!(derive_constants(1.0, 1.0, 0.2, 0.1, 1.0, None).is_err());
    }

    #[test]
    fn bit_identical() {
        let a = derive_constants(0.7, 1.3, 0.05, 0.08, 2.2, Some(0.3)).unwrap();
        let b = derive_constants(0.7, 1.3, 0.05, 0.08, 2.2, Some(0.3)).unwrap();
        assert_eq!(a, b);
    }
}
