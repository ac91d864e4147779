use std::collections::BTreeMap;

use ndarray::{Array1, ArrayView1};
use rayon::prelude::*;

use super::certificate::{assemble, Condition, EBCertificate, LogLogFit, Mode, RegionSummary, Term};
use super::region::{Region, Sample, Sampler};
use super::sublevel::{sublevel_distance, SublevelOracle};
use crate::bregman::{solve_subproblem, BregmanKernel, BregmanStep};
use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::{CompositeProblem, Objective};
use crate::Scalar;

/// Where the test points come from.
#[derive(Debug, Clone)]
pub enum SampleSource<S> {
    /// Rejection samples of `𝔅(x̄; η, ν)`.
    Region { region: Region<S>, sampler: Sampler },
    /// A designated sequence, e.g. the points of a counterexample scan.
    Sequence { points: Vec<Array1<S>>, f_bar: S },
}

impl<S: Scalar> SampleSource<S> {
    pub fn region(region: Region<S>, sampler: Sampler) -> Self {
        Self::Region { region, sampler }
    }

    pub fn f_bar(&self) -> S {
        match self {
            Self::Region { region, .. } => region.f_bar,
            Self::Sequence { f_bar, .. } => *f_bar,
        }
    }

    fn draw(&self, obj: &dyn Objective<S>) -> Result<(Vec<Sample<S>>, Option<RegionSummary>, Mode)> {
        match self {
            Self::Region { region, sampler } => {
                Ok((sampler.sample(obj, region)?, Some(region.into()), Mode::Samples))
            }
            Self::Sequence { points, .. } => {
                let samples = points
                    .iter()
                    .map(|x| {
                        Ok(Sample {
                            f: obj.objective(x.view())?,
                            x: x.clone(),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok((samples, None, Mode::Sequence))
            }
        }
    }
}

/// A single-valued selection of the proximal mapping `x ↦ T(x)`.
pub trait ProxMap<S: Scalar>: Sync {
    fn apply(&self, x: ArrayView1<S>) -> Result<Array1<S>>;
}

/// `T_{D,ε}` of a composite problem through [`solve_subproblem`].
#[derive(Debug, Clone)]
pub struct BregmanProx<'a, S: Scalar> {
    pub problem: &'a CompositeProblem<S>,
    pub step: BregmanStep<S>,
    pub inner_tol: Option<S>,
}

impl<S: Scalar> ProxMap<S> for BregmanProx<'_, S> {
    fn apply(&self, x: ArrayView1<S>) -> Result<Array1<S>> {
        Ok(solve_subproblem(self.problem, &self.step, x, self.inner_tol)?.point)
    }
}

/// Wraps a closure as a [`ProxMap`], e.g. an analytic prox of a raw function.
pub struct ProxFn<F>(pub F);

impl<S: Scalar, F> ProxMap<S> for ProxFn<F>
where
    F: Fn(ArrayView1<S>) -> Result<Array1<S>> + Sync,
{
    fn apply(&self, x: ArrayView1<S>) -> Result<Array1<S>> {
        (self.0)(x)
    }
}

fn params(entries: &[(&str, f64)]) -> BTreeMap<String, f64> {
    entries.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Evaluated inequality at one sample, plus the pair fed to the exponent fit.
struct Eval {
    term: Option<Term>,
    fit: Option<(f64, f64)>,
}

/// Evaluates `sides` on every sample in parallel, keeping sample order.
fn run<S, F>(
    obj: &dyn Objective<S>,
    source: &SampleSource<S>,
    condition: Condition,
    params: BTreeMap<String, f64>,
    candidate: Option<f64>,
    sides: F,
) -> Result<EBCertificate>
where
    S: Scalar,
    F: Fn(&Sample<S>) -> Result<Eval> + Sync + Send,
{
    let (samples, region, mode) = source.draw(obj)?;
    let evals = samples.par_iter().map(&sides).collect::<Result<Vec<_>>>()?;
    let terms: Vec<Term> = evals.iter().filter_map(|e| e.term.clone()).collect();
    if terms.is_empty() {
        return Err(Error::InsufficientSamples {
            accepted: 0,
            required: 1,
        });
    }
    let mut cert = assemble(condition, params, region, &terms, mode, candidate);
    cert.exponent_fit = LogLogFit::fit(evals.iter().filter_map(|e| e.fit));
    Ok(cert)
}

fn term<S: Scalar>(x: &Array1<S>, lhs: S, rhs: S) -> Term {
    Term {
        x: x.mapv(|v| v.as_f64()),
        lhs: lhs.as_f64(),
        rhs: rhs.as_f64(),
    }
}

fn require_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
    }
}

/// `dist^γ(x, [F≤F̄]) ≤ c₁·dist(0, ∂F(x))`. The fit regresses
/// `ln dist(0, ∂F)` on `ln dist(x, [F≤F̄])`, so its slope estimates `γ`.
pub fn certify_level_set_subdiff_eb<S: Scalar>(
    obj: &dyn Objective<S>,
    source: &SampleSource<S>,
    gamma: S,
    oracle: &SublevelOracle<S>,
    candidate: Option<f64>,
) -> Result<EBCertificate> {
    require_positive("gamma", gamma.as_f64())?;
    let f_bar = source.f_bar();
    run(
        obj,
        source,
        Condition::LevelSetSubdiff,
        params(&[("gamma", gamma.as_f64())]),
        candidate,
        |s| {
            let d = sublevel_distance(obj, s.x.view(), f_bar, oracle)?;
            let r = obj.subdiff_dist(s.x.view())?;
            Ok(Eval {
                term: Some(term(&s.x, d.powf(gamma), r)),
                fit: Some((d.as_f64(), r.as_f64())),
            })
        },
    )
}

/// `dist^p(x, [F≤F̄]) ≤ θ·‖x − T(x)‖`.
pub fn certify_level_set_bregman_eb<S: Scalar>(
    obj: &dyn Objective<S>,
    prox: &dyn ProxMap<S>,
    source: &SampleSource<S>,
    p_exp: S,
    oracle: &SublevelOracle<S>,
    candidate: Option<f64>,
) -> Result<EBCertificate> {
    require_positive("p", p_exp.as_f64())?;
    let f_bar = source.f_bar();
    run(
        obj,
        source,
        Condition::LevelSetBregman,
        params(&[("p", p_exp.as_f64())]),
        candidate,
        |s| {
            let d = sublevel_distance(obj, s.x.view(), f_bar, oracle)?;
            let t = prox.apply(s.x.view())?;
            let step = linalg::dist(s.x.view(), t.view());
            Ok(Eval {
                term: Some(term(&s.x, d.powf(p_exp), step)),
                fit: Some((d.as_f64(), step.as_f64())),
            })
        },
    )
}

/// `dist(x, [F≤F̄]) ≤ c₁′·dist(0, ∂F(x))` on a value band. Pass a region
/// whose ball covers the part of the band of interest.
pub fn certify_strong_ls_subdiff_eb<S: Scalar>(
    obj: &dyn Objective<S>,
    source: &SampleSource<S>,
    oracle: &SublevelOracle<S>,
    candidate: Option<f64>,
) -> Result<EBCertificate> {
    let mut cert = certify_level_set_subdiff_eb(obj, source, S::one(), oracle, candidate)?;
    cert.condition = Condition::StrongLsSubdiff;
    cert.params.clear();
    Ok(cert)
}

/// `dist(x, [F≤F̄]) ≤ θ′·‖x − T(x)‖` on a value band.
pub fn certify_strong_ls_bregman_eb<S: Scalar>(
    obj: &dyn Objective<S>,
    prox: &dyn ProxMap<S>,
    source: &SampleSource<S>,
    oracle: &SublevelOracle<S>,
    candidate: Option<f64>,
) -> Result<EBCertificate> {
    let mut cert = certify_level_set_bregman_eb(obj, prox, source, S::one(), oracle, candidate)?;
    cert.condition = Condition::StrongLsBregman;
    cert.params.clear();
    Ok(cert)
}

fn critical_distance<S: Scalar>(obj: &dyn Objective<S>, x: ArrayView1<S>) -> Result<S> {
    obj.oracles()
        .critical_points
        .as_ref()
        .map(|c| c.distance(x))
        .ok_or_else(|| Error::Capability("critical-point oracle".into()))
}

/// `dist(x, X̄_P) ≤ c₂·dist(0, ∂F(x))`.
pub fn certify_weak_metric_subreg<S: Scalar>(
    obj: &dyn Objective<S>,
    source: &SampleSource<S>,
    candidate: Option<f64>,
) -> Result<EBCertificate> {
    critical_distance(obj, Array1::zeros(obj.dim()).view())?;
    run(obj, source, Condition::WeakMetricSubreg, BTreeMap::new(), candidate, |s| {
        let d = critical_distance(obj, s.x.view())?;
        let r = obj.subdiff_dist(s.x.view())?;
        Ok(Eval {
            term: Some(term(&s.x, d, r)),
            fit: Some((d.as_f64(), r.as_f64())),
        })
    })
}

/// `dist(x, X̄_P) ≤ c₃·‖x − T(x)‖`.
pub fn certify_bregman_prox_eb<S: Scalar>(
    obj: &dyn Objective<S>,
    prox: &dyn ProxMap<S>,
    source: &SampleSource<S>,
    candidate: Option<f64>,
) -> Result<EBCertificate> {
    critical_distance(obj, Array1::zeros(obj.dim()).view())?;
    run(obj, source, Condition::BregmanProxEb, BTreeMap::new(), candidate, |s| {
        let d = critical_distance(obj, s.x.view())?;
        let t = prox.apply(s.x.view())?;
        let step = linalg::dist(s.x.view(), t.view());
        Ok(Eval {
            term: Some(term(&s.x, d, step)),
            fit: Some((d.as_f64(), step.as_f64())),
        })
    })
}

/// `dist(x, X̄_P) ≤ c₄·‖x − T(x)‖` for samples with `F(x) ≤ ξ` and
/// `‖x − T(x)‖ ≤ σ`; other samples are dropped. The prox should use the
/// Euclidean kernel.
pub fn certify_luo_tseng<S: Scalar>(
    obj: &dyn Objective<S>,
    prox: &dyn ProxMap<S>,
    source: &SampleSource<S>,
    xi: S,
    sigma: S,
    candidate: Option<f64>,
) -> Result<EBCertificate> {
    require_positive("sigma", sigma.as_f64())?;
    critical_distance(obj, Array1::zeros(obj.dim()).view())?;
    run(
        obj,
        source,
        Condition::LuoTseng,
        params(&[("xi", xi.as_f64()), ("sigma", sigma.as_f64())]),
        candidate,
        |s| {
            let t = prox.apply(s.x.view())?;
            let step = linalg::dist(s.x.view(), t.view());
            if s.f > xi || step > sigma {
                return Ok(Eval { term: None, fit: None });
            }
            let d = critical_distance(obj, s.x.view())?;
            Ok(Eval {
                term: Some(term(&s.x, d, step)),
                fit: Some((d.as_f64(), step.as_f64())),
            })
        },
    )
}

/// `dist(0, ∂F(x)) ≥ c₅(F(x) − F̄)^α`; the fit slope estimates `α`.
pub fn certify_kl<S: Scalar>(
    obj: &dyn Objective<S>,
    source: &SampleSource<S>,
    alpha: S,
    candidate: Option<f64>,
) -> Result<EBCertificate> {
    let a = alpha.as_f64();
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::InvalidArgument(format!("KL exponent must lie in (0, 1), got {a}")));
    }
    let f_bar = source.f_bar();
    run(obj, source, Condition::Kl, params(&[("alpha", a)]), candidate, |s| {
        let r = obj.subdiff_dist(s.x.view())?;
        let gap = (s.f - f_bar).max(S::zero());
        Ok(Eval {
            term: Some(term(&s.x, r, gap.powf(alpha))),
            fit: Some((gap.as_f64(), r.as_f64())),
        })
    })
}

/// `G_{D,ε}(x) ≥ μ(F(x) − F̄)^q`; the fit slope estimates `q`.
pub fn certify_bp_gap<S: Scalar>(
    p: &CompositeProblem<S>,
    step: &BregmanStep<S>,
    source: &SampleSource<S>,
    q: S,
    inner_tol: Option<S>,
    candidate: Option<f64>,
) -> Result<EBCertificate> {
    let qf = q.as_f64();
    if !(0.0..2.0).contains(&qf) {
        return Err(Error::InvalidArgument(format!("gap exponent must lie in [0, 2), got {qf}")));
    }
    let f_bar = source.f_bar();
    run(p, source, Condition::BpGap, params(&[("q", qf), ("eps", step.eps().as_f64())]), candidate, |s| {
        let sol = solve_subproblem(p, step, s.x.view(), inner_tol)?;
        let gap = (s.f - f_bar).max(S::zero());
        Ok(Eval {
            term: Some(term(&s.x, sol.gap_value, gap.powf(q))),
            fit: Some((gap.as_f64(), sol.gap_value.as_f64())),
        })
    })
}

/// `½D_g(x, L) ≥ μ(F(x) − F*)` with
/// `D_g(x, L) = −2L·min_y [⟨∇f(x), y−x⟩ + (L/2)‖y−x‖² + g(y) − g(x)]`,
/// which equals `2G` for the Euclidean kernel with `ε = 1/L`.
pub fn certify_prox_pl<S: Scalar>(
    p: &CompositeProblem<S>,
    source: &SampleSource<S>,
    candidate: Option<f64>,
) -> Result<EBCertificate> {
    let f_star = p
        .analytic()
        .optimal_value
        .ok_or_else(|| Error::Capability("optimal value F*".into()))?;
    let step = BregmanStep::new(BregmanKernel::euclidean(), S::one() / p.lipschitz())?;
    run(p, source, Condition::ProxPl, params(&[("L", p.lipschitz().as_f64())]), candidate, |s| {
        let sol = solve_subproblem(p, &step, s.x.view(), None)?;
        let gap = (s.f - f_star).max(S::zero());
        Ok(Eval {
            term: Some(term(&s.x, sol.gap_value, gap)),
            fit: Some((gap.as_f64(), sol.gap_value.as_f64())),
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ex53_prox_reference, load_corpus};
    use crate::diagnostics::certificate::Verdict;
    use crate::problem::{Quadratic, Zero};
    use ndarray::array;

    fn half_sq(n: usize) -> CompositeProblem<f64> {
        let mut p = CompositeProblem::new(Quadratic::diagonal(Array1::ones(n), Array1::zeros(n)).unwrap(), Zero);
        let a = p.analytic_mut();
        a.critical_points = Some(crate::problem::CriticalSet::single(Array1::zeros(n)));
        a.solution_set = a.critical_points.clone();
        a.optimal_value = Some(0.0);
        p
    }

    fn source(p: &CompositeProblem<f64>, n: usize) -> SampleSource<f64> {
        let region = Region::new(p, Array1::zeros(n), 1.0, 1.0).unwrap();
        SampleSource::region(region, Sampler::new(300, 5))
    }

    #[test]
    fn quadratic_level_set_constant_is_one() {
        let p = half_sq(2);
        let c = certify_level_set_subdiff_eb(&p, &source(&p, 2), 1.0, &SublevelOracle::SolutionSet, None).unwrap();
        assert!(c.certified());
        assert!((c.constant_estimate.unwrap() - 1.0).abs() < 1e-12);
        assert!((c.exponent_fit.unwrap().slope - 1.0).abs() < 1e-9);
    }

    #[test]
    fn quadratic_bregman_theta_is_two() {
        let p = half_sq(2);
        let prox = BregmanProx {
            problem: &p,
            step: BregmanStep::new(BregmanKernel::euclidean(), 0.5).unwrap(),
            inner_tol: None,
        };
        let c = certify_level_set_bregman_eb(&p, &prox, &source(&p, 2), 1.0, &SublevelOracle::SolutionSet, None)
            .unwrap();
        assert!((c.constant_estimate.unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn quadratic_kl_constant_is_sqrt_two() {
        let p = half_sq(3);
        let c = certify_kl(&p, &source(&p, 3), 0.5, None).unwrap();
        assert!((c.constant_estimate.unwrap() - 2f64.sqrt()).abs() < 1e-12);
        assert!((c.exponent_fit.unwrap().slope - 0.5).abs() < 1e-9);
    }

    #[test]
    fn quadratic_gap_is_proportional() {
        // t = x/2, E = ½x² − ¼x² = ¼x², G = (F − E)/ε = ½x², so μ = 1 at q = 1.
        let p = half_sq(1);
        let step = BregmanStep::new(BregmanKernel::euclidean(), 0.5).unwrap();
        let c = certify_bp_gap(&p, &step, &source(&p, 1), 1.0, None, None).unwrap();
        assert!((c.constant_estimate.unwrap() - 1.0).abs() < 1e-12, "{:?}", c.constant_estimate);
        let pl = certify_prox_pl(&p, &source(&p, 1), Some(0.99)).unwrap();
        // ε = 1/L = 1 gives t = 0, G = ½x² = F.
        assert!(pl.certified());
        assert!((pl.constant_estimate.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn staircase_kl_scan_vanishes() {
        let entry = load_corpus("EX_5_2").unwrap();
        let points: Vec<Array1<f64>> = (3..=200).map(|n| array![1.0 / (n as f64 - 1.0)]).collect();
        let src = SampleSource::Sequence { points, f_bar: 0.0 };
        let c = certify_kl(entry.objective(), &src, 0.5, None).unwrap();
        assert_eq!(c.verdict, Verdict::Refuted);
    }

    #[test]
    fn ex53_bregman_ratio_diverges() {
        let entry = load_corpus("EX_5_3").unwrap();
        let points: Vec<Array1<f64>> = (2..=50)
            .map(|n| {
                let n = n as f64;
                array![1.0 / n, 1.0 / (3.0 * n * n)]
            })
            .collect();
        let src = SampleSource::Sequence { points, f_bar: 0.0 };
        let prox = ProxFn(|x: ArrayView1<f64>| ex53_prox_reference(x));
        let c = certify_bregman_prox_eb(entry.objective(), &prox, &src, None).unwrap();
        assert_eq!(c.verdict, Verdict::Refuted);
    }

    #[test]
    fn missing_critical_oracle_is_a_capability_error() {
        let p = CompositeProblem::new(Quadratic::diagonal(array![1.0], array![0.0]).unwrap(), Zero);
        let src = SampleSource::Sequence {
            points: vec![array![0.5]],
            f_bar: 0.0,
        };
        assert!(matches!(certify_weak_metric_subreg(&p, &src, None), Err(Error::Capability(_))));
    }
}
