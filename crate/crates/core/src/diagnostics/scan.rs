use ndarray::{array, Array1};
use serde::Serialize;

use super::certificate::{trend, Direction, EBCertificate};
use super::certify::{certify_level_set_subdiff_eb, SampleSource};
use super::region::Sampler;
use super::sublevel::SublevelOracle;
use crate::corpus::{ex53_prox_reference, load_corpus, staircase_subdiff_dist, staircase_value};
use crate::error::{Error, Result};
use crate::linalg;

/// Largest index accepted by [`scan_counterexample`].
pub const MAX_SCAN_N: u64 = 1 << 20;

/// The three counterexample entries with a designated witness sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Counterexample {
    /// Cubic seam: `‖xₙ‖/‖∇F(xₙ)‖` at `xₙ = (n^{−5/4}, 1/n)`.
    Ex51,
    /// Staircase: the bound `2n^α/(n−1)` on the KL ratio at `xₙ = 1/(n−1)`.
    Ex52,
    /// Cubic seam: `‖xₙ‖/‖xₙ − T(xₙ)‖` at `xₙ = (1/n, 1/(3n²))`.
    Ex53,
}

impl Counterexample {
    pub fn parse(id: &str) -> Result<Self> {
        match id.trim() {
            "EX_5_1" => Ok(Self::Ex51),
            "EX_5_2" => Ok(Self::Ex52),
            "EX_5_3" => Ok(Self::Ex53),
            other => Err(Error::UnknownCorpus {
                id: other.to_string(),
                valid: vec!["EX_5_1".into(), "EX_5_2".into(), "EX_5_3".into()],
            }),
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            Self::Ex51 => "EX_5_1",
            Self::Ex52 => "EX_5_2",
            Self::Ex53 => "EX_5_3",
        }
    }

    /// Smallest index for which the sequence is defined.
    pub fn first_n(self) -> u64 {
        match self {
            Self::Ex51 => 1,
            Self::Ex52 => 3,
            Self::Ex53 => 2,
        }
    }

    /// The designated ratio grows for the seam examples and vanishes for the
    /// staircase.
    pub fn direction(self) -> Direction {
        match self {
            Self::Ex52 => Direction::Lower,
            _ => Direction::Upper,
        }
    }

    pub fn point(self, n: u64) -> Array1<f64> {
        let nf = n as f64;
        match self {
            Self::Ex51 => array![nf.powf(-1.25), 1.0 / nf],
            Self::Ex52 => array![1.0 / (nf - 1.0)],
            Self::Ex53 => array![1.0 / nf, 1.0 / (3.0 * nf * nf)],
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScanRow {
    pub n: u64,
    pub ratio: f64,
    /// The staircase KL ratio itself, which the bound dominates.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measured: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanReport {
    pub example: Counterexample,
    pub alpha: Option<f64>,
    pub rows: Vec<ScanRow>,
    /// Strictly monotone in the designated direction over the whole scan.
    pub monotone: bool,
    /// `last/first` for growth, `first/last` for decay.
    pub factor: f64,
    /// Set when the tail trend rule refutes the condition.
    pub refutation: Option<String>,
    /// Level-set subdifferential bound with exponent one on the entry's
    /// recommended region.
    pub positive: EBCertificate,
}

impl ScanReport {
    pub fn refuted(&self) -> bool {
        self.refutation.is_some()
    }

    pub fn row(&self, n: u64) -> Option<&ScanRow> {
        self.rows.iter().find(|r| r.n == n)
    }
}

fn ratio_at(example: Counterexample, n: u64, alpha: f64) -> Result<ScanRow> {
    let x = example.point(n);
    let nf = n as f64;
    Ok(match example {
        Counterexample::Ex51 => {
            let grad = array![2.0 * x[0], -3.0 * x[1] * x[1]];
            ScanRow {
                n,
                ratio: linalg::norm(x.view()) / linalg::norm(grad.view()),
                measured: None,
            }
        }
        Counterexample::Ex52 => {
            let measured = staircase_subdiff_dist(x[0]) / staircase_value(x[0]).powf(alpha);
            ScanRow {
                n,
                ratio: 2.0 * nf.powf(alpha) / (nf - 1.0),
                measured: Some(measured),
            }
        }
        Counterexample::Ex53 => {
            let t = ex53_prox_reference(x.view())?;
            ScanRow {
                n,
                ratio: linalg::norm(x.view()) / linalg::dist(x.view(), t.view()),
                measured: None,
            }
        }
    })
}

/// Evaluates the designated ratio along the witness sequence and certifies
/// the level-set subdifferential bound (exponent one) on a sample band.
///
/// `alpha` is the KL exponent for the staircase and is ignored otherwise.
pub fn scan_counterexample(id: &str, n_values: &[u64], alpha: Option<f64>, sampler: Sampler) -> Result<ScanReport> {
    let example = Counterexample::parse(id)?;
    let alpha = match example {
        Counterexample::Ex52 => {
            let a = alpha.unwrap_or(0.5);
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::InvalidArgument(format!("KL exponent must lie in (0, 1), got {a}")));
            }
            Some(a)
        }
        _ => None,
    };
    if n_values.len() < 2 {
        return Err(Error::InvalidArgument("a scan needs at least two indices".into()));
    }
    if let Some(&bad) = n_values
        .iter()
        .find(|&&n| n < example.first_n() || n > MAX_SCAN_N)
    {
        return Err(Error::InvalidArgument(format!(
            "{}: index {bad} outside [{}, {MAX_SCAN_N}]",
            example.id(),
            example.first_n()
        )));
    }
    let rows = n_values
        .iter()
        .map(|&n| ratio_at(example, n, alpha.unwrap_or(0.0)))
        .collect::<Result<Vec<_>>>()?;
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let dir = example.direction();
    let monotone = ratios.windows(2).all(|w| match dir {
        Direction::Upper => w[1] > w[0],
        Direction::Lower => w[1] < w[0],
    });
    let (first, last) = (ratios[0], ratios[ratios.len() - 1]);
    let factor = match dir {
        Direction::Upper => last / first,
        Direction::Lower => first / last,
    };
    let refutation = trend(&ratios, dir);

    let entry = load_corpus(example.id())?;
    let region = entry
        .recommended_regions
        .first()
        .cloned()
        .ok_or_else(|| Error::Capability(format!("{} has no recommended region", example.id())))?;
    let positive = certify_level_set_subdiff_eb(
        entry.objective(),
        &SampleSource::region(region, sampler),
        1.0,
        &SublevelOracle::AnalyticProjection,
        None,
    )?;
    Ok(ScanReport {
        example,
        alpha,
        rows,
        monotone,
        factor,
        refutation,
        positive,
    })
}

/// Powers of two `2^lo ..= 2^hi`.
pub fn powers_of_two(lo: u32, hi: u32) -> Vec<u64> {
    (lo..=hi).map(|k| 1u64 << k).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sampler() -> Sampler {
        Sampler::new(300, 3)
    }

    #[test]
    fn cubic_seam_ratio_values() {
        let r = scan_counterexample("EX_5_1", &powers_of_two(4, 20), None, sampler()).unwrap();
        // ‖x‖/‖∇F‖ at n = 16: x = (1/32, 1/16), ∇F = (1/16, −3/256).
        let x: f64 = (1.0 / 1024.0 + 1.0 / 256.0_f64).sqrt();
        let g: f64 = (1.0 / 256.0 + 9.0 / 65536.0_f64).sqrt();
        assert!((r.row(16).unwrap().ratio - x / g).abs() < 1e-12);
        assert!((r.row(16).unwrap().ratio - 1.099).abs() < 1e-3);
        assert!((r.row(256).unwrap().ratio - 2.061).abs() < 1e-3);
        assert!(r.monotone && r.refuted());
        assert!(r.positive.certified());
        // Tends to n^{1/4}/2.
        let n = (1u64 << 20) as f64;
        assert!((r.rows.last().unwrap().ratio / (n.powf(0.25) / 2.0) - 1.0).abs() < 1e-2);
    }

    #[test]
    fn ex53_ratio_is_about_three_n() {
        let ns: Vec<u64> = (2..=50).collect();
        let r = scan_counterexample("EX_5_3", &ns, None, sampler()).unwrap();
        assert!((r.row(10).unwrap().ratio / 30.0 - 1.0).abs() < 0.02);
        assert!(r.monotone);
        assert!(r.row(50).unwrap().ratio > 10.0 * r.row(2).unwrap().ratio);
        assert!(r.refuted());
    }

    #[test]
    fn staircase_bound_decreases_and_dominates() {
        let ns: Vec<u64> = (3..=200).collect();
        for alpha in [0.25, 0.5, 0.9] {
            let r = scan_counterexample("EX_5_2", &ns, Some(alpha), sampler()).unwrap();
            assert!(r.monotone, "alpha {alpha}");
            assert!(r.rows.iter().all(|row| row.measured.unwrap() <= row.ratio * (1.0 + 1e-12)));
            assert!(r.positive.certified());
        }
        let half = scan_counterexample("EX_5_2", &ns, Some(0.5), sampler()).unwrap();
        assert!((half.row(100).unwrap().ratio - 20.0 / 99.0).abs() < 1e-12);
        assert!(half.refuted());
        // At α = 0.9 the bound decays like n^{-0.1}: monotone but slow.
        let slow = scan_counterexample("EX_5_2", &ns, Some(0.9), sampler()).unwrap();
        assert!(!slow.refuted() && slow.factor < 10.0);
    }

    #[test]
    fn out_of_range_indices_are_rejected() {
        assert!(scan_counterexample("EX_5_2", &[2, 3], Some(0.5), sampler()).is_err());
        assert!(scan_counterexample("EX_5_1", &[1, MAX_SCAN_N + 1], None, sampler()).is_err());
        assert!(scan_counterexample("QUAD_SC", &[1, 2], None, sampler()).is_err());
    }
}
