use ndarray::{Array1, ArrayView1};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::{default_inner_tol, inner_prox_gradient, BregmanStep, SubproblemSolution};
use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::{objective, CompositeProblem, Objective};
use crate::Scalar;

/// One asserted inequality `lhs ≤ rhs` with its slack.
#[derive(Debug, Clone, Serialize)]
pub struct InequalityCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`; negative means the inequality is violated before tolerance.
    pub slack: f64,
    pub tolerance: f64,
    pub holds: bool,
}

impl InequalityCheck {
    /// `lhs ≤ rhs` up to `1e−8·(1 + max(|lhs|, |rhs|))`.
    pub fn leq<S: Scalar>(name: &str, lhs: S, rhs: S) -> Self {
        Self::leq_with(name, lhs, rhs, S::lit(1e-8))
    }

    /// `lhs ≤ rhs` up to `rel·(1 + max(|lhs|, |rhs|))`.
    pub fn leq_with<S: Scalar>(name: &str, lhs: S, rhs: S, rel: S) -> Self {
        let tolerance = rel * (S::one() + lhs.abs().max(rhs.abs()));
        let slack = rhs - lhs;
        Self {
            name: name.to_string(),
            lhs: lhs.as_f64(),
            rhs: rhs.as_f64(),
            slack: slack.as_f64(),
            tolerance: tolerance.as_f64(),
            holds: slack >= -tolerance,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct InequalityReport {
    pub checks: Vec<InequalityCheck>,
}

impl InequalityReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    pub fn min_slack(&self) -> f64 {
        self.checks.iter().map(|c| c.slack).fold(f64::INFINITY, f64::min)
    }

    pub fn failures(&self) -> impl Iterator<Item = &InequalityCheck> {
        self.checks.iter().filter(|c| !c.holds)
    }

    pub fn get(&self, name: &str) -> Option<&InequalityCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn extend(&mut self, other: InequalityReport) {
        self.checks.extend(other.checks);
    }
}

fn objective_at<S: Scalar>(p: &CompositeProblem<S>, x: ArrayView1<S>, what: &str) -> Result<S> {
    let v = objective(p, x)?;
    if !v.is_finite() {
        return Err(Error::InvalidArgument(format!("{what} is outside dom F")));
    }
    Ok(v)
}

/// Sufficient decrease: `F(t) ≤ E(x) − a‖x−t‖²` and `F(t) ≤ F(x) − a‖x−t‖²`
/// with `a = ½(m/ε − L)`, plus the identity `E = F − εG`.
pub fn check_sufficient_decrease<S: Scalar>(
    p: &CompositeProblem<S>,
    step: &BregmanStep<S>,
    x: ArrayView1<S>,
    sol: &SubproblemSolution<S>,
) -> Result<InequalityReport> {
    let (m, eps, lip) = (step.kernel().m(), step.eps(), p.lipschitz());
    if !(eps * lip < m) {
        return Err(Error::Regime(format!(
            "sufficient decrease needs eps < m/L, got eps={eps}, m/L={}",
            m / lip
        )));
    }
    let a = S::lit(0.5) * (m / eps - lip);
    let fx = objective_at(p, x, "x")?;
    let ft = objective_at(p, sol.point.view(), "t")?;
    let step_sq = {
        let d = linalg::dist(x, sol.point.view());
        d * d
    };
    let identity_gap = (sol.envelope_value - (fx - eps * sol.gap_value)).abs();
    Ok(InequalityReport {
        checks: vec![
            InequalityCheck::leq("F(t) <= E(x) - a|x-t|^2", ft, sol.envelope_value - a * step_sq),
            InequalityCheck::leq("F(t) <= F(x) - a|x-t|^2", ft, fx - a * step_sq),
            InequalityCheck::leq_with("|E - (F - eps G)| <= 0", identity_gap, S::zero(), S::lit(1e-9) * (S::one() + fx.abs())),
        ],
    })
}

/// Generalized descent `𝔞[F(t)−F(u)] ≤ 𝔟‖u−x‖² − ‖u−t‖² − 𝔠‖x−t‖²` and the
/// cost-to-go form `F(t)−F(u) ≤ κ(‖u−t‖² + ‖x−t‖²)`.
pub fn check_generalized_descent<S: Scalar>(
    p: &CompositeProblem<S>,
    step: &BregmanStep<S>,
    x: ArrayView1<S>,
    u: ArrayView1<S>,
    sol: &SubproblemSolution<S>,
) -> Result<InequalityReport> {
    let c = step.constants(p)?;
    let fu = objective_at(p, u, "u")?;
    let ft = objective_at(p, sol.point.view(), "t")?;
    let t = sol.point.view();
    let sq = |a: ArrayView1<S>, b: ArrayView1<S>| {
        let d = linalg::dist(a, b);
        d * d
    };
    let (ux, ut, xt) = (sq(u, x), sq(u, t), sq(x, t));
    Ok(InequalityReport {
        checks: vec![
            InequalityCheck::leq(
                "a[F(t)-F(u)] <= b|u-x|^2 - |u-t|^2 - c|x-t|^2",
                c.frak_a * (ft - fu),
                c.frak_b * ux - ut - c.frak_c * xt,
            ),
            InequalityCheck::leq("F(t)-F(u) <= kappa(|u-t|^2 + |x-t|^2)", ft - fu, c.kappa * (ut + xt)),
        ],
    })
}

/// Residual bound `dist(0, ∂_P F(t)) ≤ (L + M/ε̲)‖x−t‖`.
pub fn check_residual_bound<S: Scalar>(
    p: &CompositeProblem<S>,
    step: &BregmanStep<S>,
    x: ArrayView1<S>,
    sol: &SubproblemSolution<S>,
) -> Result<InequalityReport> {
    let d = p.subdiff_dist(sol.point.view())?;
    let factor = p.lipschitz() + step.kernel().big_m() / step.eps_lo();
    Ok(InequalityReport {
        checks: vec![InequalityCheck::leq(
            "dist(0,dF(t)) <= (L + M/eps_lo)|x-t|",
            d,
            factor * linalg::dist(x, sol.point.view()),
        )],
    })
}

/// Number of perturbed restarts used to probe single-valuedness of `T`.
const RESTARTS: usize = 5;

/// Gap bounds for semiconvex `g` with `ε̄ < min{m/L, m/ρ}`:
/// (ii) `(m−ε̄ρ)/(2ε̄²)‖x−T‖² ≤ G`, (iii) `G ≤ ε̄/(2ε̲(m−ε̄ρ))·dist²(0,∂F(x))`,
/// (iv) `‖x−T‖ ≤ (ε̄/(m−ε̄ρ))·√(ε̄/ε̲)·dist(0,∂F(x))`, and agreement of the inner
/// solver from perturbed starts.
pub fn check_gap_bounds<S: Scalar>(
    p: &CompositeProblem<S>,
    step: &BregmanStep<S>,
    x: ArrayView1<S>,
    sol: &SubproblemSolution<S>,
    inner_tol: Option<S>,
) -> Result<InequalityReport> {
    let c = step.constants(p)?;
    let margin = c.semiconvex_margin()?;
    let (lo, hi) = (step.eps_lo(), step.eps_hi());
    let two = S::lit(2.0);
    let dist_sub = p.subdiff_dist(x)?;
    let r = linalg::dist(x, sol.point.view());
    let g = sol.gap_value;
    let mut checks = vec![
        InequalityCheck::leq("(m-eps rho)/(2eps^2)|x-T|^2 <= G", margin / (two * hi * hi) * r * r, g),
        InequalityCheck::leq("G <= eps/(2eps_lo(m-eps rho)) dist^2", g, hi / (two * lo * margin) * dist_sub * dist_sub),
        InequalityCheck::leq("|x-T| <= eps/(m-eps rho) sqrt(eps/eps_lo) dist", r, hi / margin * (hi / lo).sqrt() * dist_sub),
    ];

    let tol = inner_tol.unwrap_or_else(|| default_inner_tol(x));
    // Distance error of the inner solve is about residual·ε/m; tighten so the
    // endpoints are resolved to `tol` in distance.
    let inner = tol * S::one().min(step.kernel().m() / step.eps());
    let grad = p.gradient(x)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let radius = S::lit(0.1) * (S::one() + linalg::norm(x));
    let mut spread = S::zero();
    for _ in 0..RESTARTS {
        let dir: Array1<S> = Array1::from_shape_fn(x.len(), |_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            S::lit(z)
        });
        let nd = linalg::norm(dir.view()).max(S::min_positive_value());
        let y0 = &sol.point + &dir.mapv(|v| v * radius / nd);
        let (end, _, _) = inner_prox_gradient(p, step, x, grad.view(), y0.view(), inner)?;
        spread = spread.max(linalg::dist(end.view(), sol.point.view()));
    }
    checks.push(InequalityCheck::leq_with(
        "restart spread <= 10 inner_tol",
        spread,
        S::lit(10.0) * tol,
        S::zero(),
    ));
    Ok(InequalityReport { checks })
}
