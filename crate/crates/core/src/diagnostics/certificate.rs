use std::collections::BTreeMap;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use super::Region;
use crate::Scalar;

/// The error-bound conditions the diagnostics can certify.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Condition {
    /// `dist^γ(x, [F≤F̄]) ≤ c₁·dist(0, ∂F(x))`.
    LevelSetSubdiff,
    /// `dist^p(x, [F≤F̄]) ≤ θ·‖x − T(x)‖`.
    LevelSetBregman,
    StrongLsSubdiff,
    StrongLsBregman,
    /// `dist(x, X̄_P) ≤ c₂·dist(0, ∂F(x))`.
    WeakMetricSubreg,
    /// `dist(x, X̄_P) ≤ c₃·‖x − T(x)‖`.
    BregmanProxEb,
    /// Like the Bregman proximal EB, restricted to `F ≤ ξ`, `‖x − T(x)‖ ≤ σ`.
    LuoTseng,
    /// `dist(0, ∂F(x)) ≥ c₅(F(x) − F̄)^α`.
    Kl,
    /// `G(x) ≥ μ(F(x) − F̄)^q`.
    BpGap,
    /// `½D_g(x, L) ≥ μ(F(x) − F*)`.
    ProxPl,
}

/// Which way the inequality `lhs ? C·rhs` points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `lhs ≤ C·rhs`; the estimate is `sup lhs/rhs`.
    Upper,
    /// `lhs ≥ C·rhs`; the estimate is `inf lhs/rhs`.
    Lower,
}

impl Condition {
    pub fn direction(self) -> Direction {
        match self {
            Self::Kl | Self::BpGap | Self::ProxPl => Direction::Lower,
            _ => Direction::Upper,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    CertifiedOnSamples,
    Refuted,
}

/// A concrete point with both sides of the inequality.
#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub point: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub note: String,
}

/// Least-squares line `v ≈ slope·u + intercept` through log–log pairs.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub n: usize,
}

impl LogLogFit {
    /// Fits `ln v` against `ln u` over pairs with both entries positive and
    /// finite. `None` with fewer than three usable pairs or no spread in `u`.
    pub fn fit(pairs: impl IntoIterator<Item = (f64, f64)>) -> Option<Self> {
        let logs: Vec<(f64, f64)> = pairs
            .into_iter()
            .filter(|&(u, v)| u > 0.0 && v > 0.0 && u.is_finite() && v.is_finite())
            .map(|(u, v)| (u.ln(), v.ln()))
            .collect();
        let n = logs.len();
        if n < 3 {
            return None;
        }
        let nf = n as f64;
        let mu = logs.iter().map(|p| p.0).sum::<f64>() / nf;
        let mv = logs.iter().map(|p| p.1).sum::<f64>() / nf;
        let suu: f64 = logs.iter().map(|p| (p.0 - mu).powi(2)).sum();
        let suv: f64 = logs.iter().map(|p| (p.0 - mu) * (p.1 - mv)).sum();
        let svv: f64 = logs.iter().map(|p| (p.1 - mv).powi(2)).sum();
        if suu <= 0.0 {
            return None;
        }
        let slope = suv / suu;
        let r2 = if svv > 0.0 { suv * suv / (suu * svv) } else { 1.0 };
        Some(Self {
            slope,
            intercept: mv - slope * mu,
            r2,
            n,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RegionSummary {
    pub x_bar: Vec<f64>,
    pub eta: f64,
    pub nu: f64,
    pub f_bar: f64,
}

impl<S: Scalar> From<&Region<S>> for RegionSummary {
    fn from(r: &Region<S>) -> Self {
        Self {
            x_bar: r.x_bar.iter().map(|v| v.as_f64()).collect(),
            eta: r.eta.as_f64(),
            nu: r.nu.as_f64(),
            f_bar: r.f_bar.as_f64(),
        }
    }
}

/// Sample-based verdict on one error-bound condition.
#[derive(Debug, Clone, Serialize)]
pub struct EBCertificate {
    pub condition: Condition,
    pub params: BTreeMap<String, f64>,
    /// `None` when the samples came from an explicit sequence.
    pub region: Option<RegionSummary>,
    pub n_samples: usize,
    /// Tightest constant consistent with every sample (`sup` or `inf` of the
    /// ratios); `None` when refuted by a degenerate ratio.
    pub constant_estimate: Option<f64>,
    /// Extreme observed ratio `lhs/rhs`.
    pub worst_ratio: f64,
    pub verdict: Verdict,
    /// The violating point when refuted, otherwise the point attaining the
    /// extreme ratio.
    pub witness: Option<Witness>,
    pub exponent_fit: Option<LogLogFit>,
    #[serde(skip)]
    pub sides: Vec<(f64, f64)>,
}

/// Relative slack granted when re-checking samples against a constant.
pub const CHECK_REL_TOL: f64 = 1e-9;

impl EBCertificate {
    pub fn certified(&self) -> bool {
        self.verdict == Verdict::CertifiedOnSamples
    }

    /// Whether every sample satisfies the inequality with constant `c`, up to
    /// [`CHECK_REL_TOL`].
    pub fn holds_with(&self, c: f64) -> bool {
        self.sides.iter().all(|&(lhs, rhs)| holds(self.condition.direction(), lhs, rhs, c))
    }

    /// Samples violating the inequality with constant `c`.
    pub fn violations_with(&self, c: f64) -> usize {
        let dir = self.condition.direction();
        self.sides.iter().filter(|&&(lhs, rhs)| !holds(dir, lhs, rhs, c)).count()
    }
}

fn holds(dir: Direction, lhs: f64, rhs: f64, c: f64) -> bool {
    let scale = 1.0 + lhs.abs().max((c * rhs).abs());
    match dir {
        Direction::Upper => lhs <= c * rhs + CHECK_REL_TOL * scale,
        Direction::Lower => lhs >= c * rhs - CHECK_REL_TOL * scale,
    }
}

/// Both sides of the inequality at one point.
#[derive(Debug, Clone)]
pub struct Term {
    pub x: Array1<f64>,
    pub lhs: f64,
    pub rhs: f64,
}

/// How the terms were produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Independent draws; order is irrelevant.
    Samples,
    /// A designated sequence; refutation may come from the trend of ratios.
    Sequence,
}

/// Number of trailing scan points that must be monotone for a sequence
/// refutation.
pub const TREND_WINDOW: usize = 10;
/// Required growth (or decay) factor between the first and last scan ratio.
pub const TREND_FACTOR: f64 = 10.0;

/// Builds a certificate from evaluated terms.
///
/// Ratios with `lhs = rhs = 0` carry no information and are skipped. In the
/// upper direction `rhs = 0 < lhs` is an infinite ratio and refutes; in the
/// lower direction `lhs = 0 < rhs` refutes. A sequence also refutes when its
/// ratios blow up (upper) or vanish (lower) monotonically. With a
/// `candidate` constant every sample is checked against it as well.
pub fn assemble(
    condition: Condition,
    params: BTreeMap<String, f64>,
    region: Option<RegionSummary>,
    terms: &[Term],
    mode: Mode,
    candidate: Option<f64>,
) -> EBCertificate {
    let dir = condition.direction();
    let informative: Vec<&Term> = terms.iter().filter(|t| !(t.lhs == 0.0 && t.rhs == 0.0)).collect();
    let ratios: Vec<f64> = informative
        .iter()
        .map(|t| if t.rhs == 0.0 { f64::INFINITY } else { t.lhs / t.rhs })
        .collect();
    let witness_of = |t: &Term, note: String| Witness {
        point: t.x.to_vec(),
        lhs: t.lhs,
        rhs: t.rhs,
        note,
    };

    let extreme = ratios
        .iter()
        .enumerate()
        .fold(None::<(usize, f64)>, |best, (i, &r)| match (best, dir) {
            (None, _) => Some((i, r)),
            (Some((_, b)), Direction::Upper) if r > b => Some((i, r)),
            (Some((_, b)), Direction::Lower) if r < b => Some((i, r)),
            (keep, _) => keep,
        });
    let worst_ratio = extreme.map_or(match dir {
        Direction::Upper => 0.0,
        Direction::Lower => f64::INFINITY,
    }, |e| e.1);

    let mut refutation: Option<Witness> = None;
    if let Some((i, r)) = extreme {
        let degenerate = match dir {
            Direction::Upper => r == f64::INFINITY,
            Direction::Lower => r == 0.0,
        };
        if degenerate {
            refutation = Some(witness_of(
                informative[i],
                "one side vanishes while the other is positive".into(),
            ));
        }
    }
    if refutation.is_none() && mode == Mode::Sequence {
        if let Some(note) = trend(&ratios, dir) {
            let last = informative.last().expect("trend needs points");
            refutation = Some(witness_of(last, note));
        }
    }
    if refutation.is_none() {
        if let Some(c) = candidate {
            if let Some(t) = informative.iter().find(|t| !holds(dir, t.lhs, t.rhs, c)) {
                refutation = Some(witness_of(t, format!("violates the inequality with constant {c}")));
            }
        }
    }

    let verdict = if refutation.is_some() {
        Verdict::Refuted
    } else {
        Verdict::CertifiedOnSamples
    };
    let constant_estimate = match (dir, worst_ratio) {
        (Direction::Upper, r) if r.is_finite() => Some(r),
        (Direction::Lower, r) if r > 0.0 && r.is_finite() => Some(r),
        _ => None,
    };
    let witness = refutation.or_else(|| {
        extreme.map(|(i, _)| witness_of(informative[i], "extreme ratio over the samples".into()))
    });
    EBCertificate {
        condition,
        params,
        region,
        n_samples: terms.len(),
        constant_estimate,
        worst_ratio,
        verdict,
        witness,
        exponent_fit: None,
        sides: terms.iter().map(|t| (t.lhs, t.rhs)).collect(),
    }
}

/// Divergence (upper) or vanishing (lower) of a ratio sequence: the last
/// [`TREND_WINDOW`] ratios move strictly monotonically in the bad direction
/// and the last ratio is [`TREND_FACTOR`] beyond the first.
pub fn trend(ratios: &[f64], dir: Direction) -> Option<String> {
    if ratios.len() < TREND_WINDOW || ratios.iter().any(|r| !r.is_finite()) {
        return None;
    }
    let tail = &ratios[ratios.len() - TREND_WINDOW..];
    let (first, last) = (ratios[0], ratios[ratios.len() - 1]);
    let ok = match dir {
        Direction::Upper => tail.windows(2).all(|w| w[1] > w[0]) && last > TREND_FACTOR * first,
        Direction::Lower => tail.windows(2).all(|w| w[1] < w[0]) && last * TREND_FACTOR < first,
    };
    ok.then(|| {
        format!(
            "ratio moves monotonically from {first:.6e} to {last:.6e} over {} scan points",
            ratios.len()
        )
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn term(lhs: f64, rhs: f64) -> Term {
        Term {
            x: array![lhs, rhs],
            lhs,
            rhs,
        }
    }

    #[test]
    fn upper_estimate_is_the_sup() {
        let terms = [term(1.0, 2.0), term(3.0, 2.0), term(0.0, 0.0)];
        let c = assemble(Condition::LevelSetSubdiff, BTreeMap::new(), None, &terms, Mode::Samples, None);
        assert!(c.certified());
        assert_eq!(c.constant_estimate, Some(1.5));
        assert!(c.holds_with(1.5) && !c.holds_with(1.4));
        assert_eq!(c.witness.unwrap().lhs, 3.0);
    }

    #[test]
    fn zero_residual_with_positive_distance_refutes() {
        let terms = [term(1.0, 2.0), term(0.5, 0.0)];
        let c = assemble(Condition::LevelSetSubdiff, BTreeMap::new(), None, &terms, Mode::Samples, None);
        assert_eq!(c.verdict, Verdict::Refuted);
        assert_eq!(c.constant_estimate, None);
        assert_eq!(c.witness.unwrap().rhs, 0.0);
    }

    #[test]
    fn lower_estimate_is_the_inf() {
        let terms = [term(2.0, 1.0), term(1.0, 4.0)];
        let c = assemble(Condition::Kl, BTreeMap::new(), None, &terms, Mode::Samples, Some(0.2));
        assert!(c.certified());
        assert_eq!(c.constant_estimate, Some(0.25));
        let strict = assemble(Condition::Kl, BTreeMap::new(), None, &terms, Mode::Samples, Some(0.3));
        assert_eq!(strict.verdict, Verdict::Refuted);
    }

    #[test]
    fn monotone_blow_up_refutes_a_sequence() {
        let terms: Vec<Term> = (1..=20).map(|n| term(n as f64, 1.0)).collect();
        let c = assemble(Condition::LevelSetBregman, BTreeMap::new(), None, &terms, Mode::Sequence, None);
        assert_eq!(c.verdict, Verdict::Refuted);
        let bounded: Vec<Term> = (1..=20).map(|n| term(2.0 - 1.0 / n as f64, 1.0)).collect();
        let c = assemble(Condition::LevelSetBregman, BTreeMap::new(), None, &bounded, Mode::Sequence, None);
        assert!(c.certified());
    }

    #[test]
    fn fit_recovers_a_power_law() {
        let fit = LogLogFit::fit((1..50).map(|i| {
            let u = i as f64 / 10.0;
            (u, 3.0 * u.powf(1.5))
        }))
        .unwrap();
        assert!((fit.slope - 1.5).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(fit.r2 > 0.999_999);
    }
}
