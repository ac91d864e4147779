use ndarray::{Array1, ArrayView1};
use serde::Serialize;

use super::certificate::{EBCertificate, Verdict, Witness};
use super::certify::{certify_weak_metric_subreg, SampleSource};
use super::region::{Region, Sampler};
use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::{CompositeProblem, Objective};
use crate::Scalar;

/// Local convexity-type conditions on the smooth part `f` over `𝔹(x̄; η)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LocalCondition {
    /// Strong convexity: `f(y) ≥ f(x) + ⟨∇f(x), y−x⟩ + (μ/2)‖y−x‖²`.
    Lsc,
    /// Strong convexity restricted to pairs with the same nearest critical point.
    Lesc,
    /// Strong convexity towards the nearest critical point `x̄_p`.
    Lwsc,
    /// `⟨∇f(x) − ∇f(x̄_p), x − x̄_p⟩ ≥ μ‖x − x̄_p‖²`.
    Lqgg,
    /// `⟨∇f(x), x − x̄_p⟩ ≥ μ‖x − x̄_p‖²`, for `g = 0`.
    Lrsi,
    /// `½‖∇f(x)‖² ≥ μ(f(x) − f(x̄))`, for `g = 0`.
    Lpl,
}

impl LocalCondition {
    pub const ALL: [Self; 6] = [Self::Lsc, Self::Lesc, Self::Lwsc, Self::Lqgg, Self::Lrsi, Self::Lpl];

    fn needs_zero_g(self) -> bool {
        matches!(self, Self::Lrsi | Self::Lpl)
    }
}

/// Largest sampled modulus for one local condition.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub condition: LocalCondition,
    pub n_constraints: usize,
    /// Largest `μ ≥ 0` satisfying every sampled constraint; `None` when even
    /// `μ = 0` fails.
    pub mu_max: Option<f64>,
    pub mu_candidate: Option<f64>,
    pub verdict: Verdict,
    pub witness: Option<Witness>,
}

/// One sampled constraint `lhs ≥ μ·weight` with `weight ≥ 0`.
#[derive(Debug, Clone)]
struct Constraint {
    point: Array1<f64>,
    lhs: f64,
    weight: f64,
}

impl Constraint {
    fn holds(&self, mu: f64) -> bool {
        let rhs = mu * self.weight;
        self.lhs >= rhs - 1e-12 * (1.0 + self.lhs.abs().max(rhs.abs()))
    }
}

/// Nearest critical point inside `𝔹(x̄; η)` to each query point.
struct Projector<S: Scalar> {
    candidates: Vec<Array1<S>>,
}

impl<S: Scalar> Projector<S> {
    fn new(obj: &dyn Objective<S>, x_bar: ArrayView1<S>, eta: S) -> Result<Self> {
        let set = obj
            .oracles()
            .critical_points
            .as_ref()
            .ok_or_else(|| Error::Capability("critical-point oracle".into()))?;
        let candidates = set.within(x_bar, eta);
        if candidates.is_empty() {
            return Err(Error::Hypothesis(format!(
                "no critical point within {eta} of the center"
            )));
        }
        Ok(Self { candidates })
    }

    fn project(&self, x: ArrayView1<S>) -> &Array1<S> {
        self.candidates
            .iter()
            .min_by(|a, b| {
                linalg::dist(a.view(), x)
                    .partial_cmp(&linalg::dist(b.view(), x))
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .expect("non-empty candidate list")
    }
}

fn to_f64<S: Scalar>(x: ArrayView1<S>) -> Array1<f64> {
    x.mapv(|v| v.as_f64())
}

/// Bisection for the largest `μ` satisfying all constraints.
fn largest_mu(constraints: &[Constraint]) -> Option<f64> {
    let ok = |mu: f64| constraints.iter().all(|c| c.holds(mu));
    if !ok(0.0) {
        return None;
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while ok(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Some(f64::INFINITY);
        }
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

/// Samples `𝔹(x̄; η)` and finds the largest modulus for which `which` holds
/// on the samples.
///
/// The pair sets are nested so that the sampled moduli respect the chain
/// `LSC ⇒ LESC ⇒ LWSC`: the strong-convexity pairs are random pairs of
/// samples plus every `(x, x̄_p)`, the essential pairs keep those with a common
/// nearest critical point, and the weak pairs are the `(x, x̄_p)` alone.
pub fn check_sufficient_conditions<S: Scalar>(
    p: &CompositeProblem<S>,
    x_bar: ArrayView1<S>,
    eta: S,
    which: LocalCondition,
    mu_candidate: Option<f64>,
    sampler: Sampler,
) -> Result<ConditionReport> {
    if which.needs_zero_g() && !p.g().is_zero() {
        return Err(Error::Hypothesis(format!("{which:?} is defined only for g = 0")));
    }
    let proj = Projector::new(p, x_bar, eta)?;
    let points = sampler.sample_ball(x_bar, eta);
    let f = p.f();
    let f_bar = f.value(x_bar);
    let half = S::lit(0.5);
    let strong = |x: ArrayView1<S>, y: ArrayView1<S>| -> Constraint {
        let d = &y - &x;
        let lhs = f.value(y) - f.value(x) - f.gradient(x).dot(&d);
        Constraint {
            point: to_f64(x),
            lhs: lhs.as_f64(),
            weight: (half * d.dot(&d)).as_f64(),
        }
    };
    let mut constraints = Vec::new();
    match which {
        LocalCondition::Lsc | LocalCondition::Lesc => {
            for pair in points.chunks_exact(2) {
                let (x, y) = (pair[0].view(), pair[1].view());
                let same = linalg::dist(proj.project(x).view(), proj.project(y).view()) <= S::lit(1e-12);
                if which == LocalCondition::Lsc || same {
                    constraints.push(strong(x, y));
                }
            }
            constraints.extend(points.iter().map(|x| strong(x.view(), proj.project(x.view()).view())));
        }
        LocalCondition::Lwsc => {
            constraints.extend(points.iter().map(|x| strong(x.view(), proj.project(x.view()).view())));
        }
        LocalCondition::Lqgg | LocalCondition::Lrsi => {
            for x in &points {
                let xp = proj.project(x.view());
                let d = x - xp;
                let mut g = f.gradient(x.view());
                if which == LocalCondition::Lqgg {
                    g = g - f.gradient(xp.view());
                }
                constraints.push(Constraint {
                    point: to_f64(x.view()),
                    lhs: g.dot(&d).as_f64(),
                    weight: d.dot(&d).as_f64(),
                });
            }
        }
        LocalCondition::Lpl => {
            for x in &points {
                let g = f.gradient(x.view());
                constraints.push(Constraint {
                    point: to_f64(x.view()),
                    lhs: (half * g.dot(&g)).as_f64(),
                    weight: (f.value(x.view()) - f_bar).as_f64(),
                });
            }
        }
    }
    constraints.retain(|c| c.weight > 0.0 || c.lhs < 0.0);
    let mu_max = largest_mu(&constraints);
    let test = mu_candidate.unwrap_or(0.0);
    let violated = constraints.iter().find(|c| !c.holds(test));
    let witness = violated.map(|c| Witness {
        point: c.point.to_vec(),
        lhs: c.lhs,
        rhs: test * c.weight,
        note: format!("{which:?} fails with modulus {test}"),
    });
    Ok(ConditionReport {
        condition: which,
        n_constraints: constraints.len(),
        mu_max,
        mu_candidate,
        verdict: if witness.is_some() {
            Verdict::Refuted
        } else {
            Verdict::CertifiedOnSamples
        },
        witness,
    })
}

/// Weak metric subregularity predicted from a local modulus `μ > ρ`, with the
/// constant `2/(μ − ρ)`, audited on samples of `region`.
#[derive(Debug, Clone, Serialize)]
pub struct PredictionReport {
    pub mu: f64,
    pub rho: f64,
    pub predicted_constant: f64,
    pub certificate: EBCertificate,
}

impl PredictionReport {
    pub fn passed(&self) -> bool {
        self.certificate.certified()
    }
}

pub fn check_subregularity_prediction<S: Scalar>(
    p: &CompositeProblem<S>,
    region: &Region<S>,
    mu: f64,
    rho: f64,
    sampler: Sampler,
) -> Result<PredictionReport> {
    if !(mu > rho) {
        return Err(Error::Hypothesis(format!("need mu > rho, got mu = {mu}, rho = {rho}")));
    }
    let predicted_constant = 2.0 / (mu - rho);
    let source = SampleSource::region(region.clone(), sampler);
    let certificate = certify_weak_metric_subreg(p, &source, Some(predicted_constant))?;
    Ok(PredictionReport {
        mu,
        rho,
        predicted_constant,
        certificate,
    })
}

/// Outcome of the local-value condition at one radius.
#[derive(Debug, Clone, Serialize)]
pub struct HRow {
    pub delta: f64,
    pub holds: bool,
    /// A nearby critical point with a larger value, and that value.
    pub witness: Option<(Vec<f64>, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValueSeparationReport {
    pub f_bar: f64,
    pub rows: Vec<HRow>,
    /// Largest scanned radius at which every nearby critical value is at most
    /// `F(x̄)`.
    pub largest_certified: Option<f64>,
}

/// Checks `F(y) ≤ F(x̄)` for every critical `y` within each `δ` of `x̄`.
pub fn check_value_separation<S: Scalar>(
    obj: &dyn Objective<S>,
    x_bar: ArrayView1<S>,
    deltas: &[S],
) -> Result<ValueSeparationReport> {
    let set = obj
        .oracles()
        .critical_points
        .as_ref()
        .ok_or_else(|| Error::Capability("critical-point oracle".into()))?;
    let f_bar = obj.objective(x_bar)?;
    let tol = S::lit(1e-12) * (S::one() + f_bar.abs());
    let mut rows = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let mut witness = None;
        for y in set.within(x_bar, delta) {
            let fy = obj.objective(y.view())?;
            if fy > f_bar + tol {
                witness = Some((to_f64(y.view()).to_vec(), fy.as_f64()));
                break;
            }
        }
        rows.push(HRow {
            delta: delta.as_f64(),
            holds: witness.is_none(),
            witness,
        });
    }
    let largest_certified = rows
        .iter()
        .filter(|r| r.holds)
        .map(|r| r.delta)
        .reduce(f64::max);
    Ok(ValueSeparationReport {
        f_bar: f_bar.as_f64(),
        rows,
        largest_certified,
    })
}
