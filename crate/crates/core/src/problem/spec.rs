//! JSON descriptions of inline problems.
//!
//! ```json
//! {"f": {"kind": "least_squares", "a": [[1, 0], [0, 2]], "b": [1, 1]},
//!  "g": {"kind": "l1", "lambda": 0.1},
//!  "analytic": {"optimal_value": 0.2}}
//! ```

use std::sync::Arc;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{
    AnalyticOracles, CompositeProblem, CriticalSet, IndicatorBox, LeastSquares, Mcp,
    NonsmoothTerm, Quadratic, SmoothTerm, Zero, L1,
};
use crate::corpus::{load_corpus, EntryProblem};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SmoothSpec {
    /// `½xᵀQx − bᵀx`; `b` defaults to zero.
    Quadratic {
        q: Vec<Vec<f64>>,
        #[serde(default)]
        b: Option<Vec<f64>>,
        #[serde(default)]
        lipschitz: Option<f64>,
    },
    /// `½‖Ax − b‖²`.
    LeastSquares {
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
        #[serde(default)]
        lipschitz: Option<f64>,
    },
    /// Smooth term of a built-in corpus entry.
    Corpus { id: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NonsmoothSpec {
    Zero,
    L1 { lambda: f64 },
    IndicatorBox { lo: f64, hi: f64 },
    /// Either `b` or `rho = 1/b` must be given.
    Mcp {
        lambda: f64,
        #[serde(default)]
        b: Option<f64>,
        #[serde(default)]
        rho: Option<f64>,
    },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyticSpec {
    #[serde(default)]
    pub critical_points: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub solutions: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub optimal_value: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineProblem {
    pub f: SmoothSpec,
    pub g: NonsmoothSpec,
    #[serde(default)]
    pub analytic: Option<AnalyticSpec>,
}

pub(crate) fn matrix(rows: &[Vec<f64>], what: &str) -> Result<Array2<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if n == 0 || m == 0 || rows.iter().any(|r| r.len() != m) {
        return Err(Error::InvalidArgument(format!(
            "{what} must be a non-empty rectangular array of rows"
        )));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    if flat.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("{what} has non-finite entries")));
    }
    Array2::from_shape_vec((n, m), flat).map_err(|e| Error::InvalidArgument(e.to_string()))
}

fn points(rows: &[Vec<f64>]) -> Vec<Array1<f64>> {
    rows.iter().map(|r| Array1::from_vec(r.clone())).collect()
}

impl SmoothSpec {
    pub fn build(&self) -> Result<Arc<dyn SmoothTerm<f64>>> {
        Ok(match self {
            Self::Quadratic { q, b, lipschitz } => {
                let q = matrix(q, "q")?;
                let b = b
                    .clone()
                    .map(Array1::from_vec)
                    .unwrap_or_else(|| Array1::zeros(q.nrows()));
                Arc::new(match lipschitz {
                    Some(l) => Quadratic::with_lipschitz(q, b, *l)?,
                    None => {
                        let f = Quadratic::new(q, b)?;
                        log::info!("quadratic: lipschitz constant set to lambda_max(Q) = {}", f.lipschitz());
                        f
                    }
                })
            }
            Self::LeastSquares { a, b, lipschitz } => {
                let a = matrix(a, "a")?;
                let b = Array1::from_vec(b.clone());
                Arc::new(match lipschitz {
                    Some(l) => LeastSquares::with_lipschitz(a, b, *l)?,
                    None => {
                        let f = LeastSquares::new(a, b)?;
                        log::info!("least squares: lipschitz constant set to lambda_max(A^T A) = {}", f.lipschitz());
                        f
                    }
                })
            }
            Self::Corpus { id } => match load_corpus(id)?.problem {
                EntryProblem::Composite(p) => p.f_arc(),
                EntryProblem::Raw(_) => {
                    return Err(Error::InvalidArgument(format!(
                        "corpus entry {id} has no smooth/nonsmooth split"
                    )))
                }
            },
        })
    }
}

impl NonsmoothSpec {
    pub fn build(&self) -> Result<Arc<dyn NonsmoothTerm<f64>>> {
        Ok(match *self {
            Self::Zero => Arc::new(Zero),
            Self::L1 { lambda } => Arc::new(L1::new(lambda)?),
            Self::IndicatorBox { lo, hi } => Arc::new(IndicatorBox::new(lo, hi)?),
            Self::Mcp { lambda, b, rho } => Arc::new(match (b, rho) {
                (Some(b), None) => Mcp::new(lambda, b)?,
                (None, Some(rho)) => Mcp::from_rho(lambda, rho)?,
                _ => {
                    return Err(Error::InvalidArgument(
                        "mcp needs exactly one of `b` and `rho`".into(),
                    ))
                }
            }),
        })
    }
}

impl InlineProblem {
    pub fn build(&self) -> Result<CompositeProblem<f64>> {
        let f = self.f.build()?;
        let g = self.g.build()?;
        let mut oracles = AnalyticOracles::default();
        if let Some(a) = &self.analytic {
            for set in [&a.critical_points, &a.solutions].into_iter().flatten() {
                if set.iter().any(|p| p.len() != f.dim()) {
                    return Err(Error::InvalidArgument(format!(
                        "analytic points must have dimension {}",
                        f.dim()
                    )));
                }
            }
            oracles.critical_points = a.critical_points.as_deref().map(|r| CriticalSet::Points(points(r)));
            oracles.solution_set = a.solutions.as_deref().map(|r| CriticalSet::Points(points(r)));
            oracles.optimal_value = a.optimal_value;
        }
        Ok(CompositeProblem::from_arcs(f, g).with_oracles(oracles))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::objective;
    use ndarray::array;

    #[test]
    fn parses_and_builds() {
        let json = r#"{"f": {"kind": "quadratic", "q": [[1, 0], [0, 1]]},
                       "g": {"kind": "l1", "lambda": 1.0}}"#;
        let spec: InlineProblem = serde_json::from_str(json).unwrap();
        let p = spec.build().unwrap();
        assert_eq!(objective(&p, array![1.0, -2.0].view()).unwrap(), 5.5);
        assert!((p.lipschitz() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn ragged_matrix_is_rejected() {
        let json = r#"{"f": {"kind": "quadratic", "q": [[1, 0], [0]]}, "g": {"kind": "zero"}}"#;
        let spec: InlineProblem = serde_json::from_str(json).unwrap();
        assert!(spec.build().is_err());
    }

    #[test]
    fn mcp_needs_one_parameter() {
        let g = NonsmoothSpec::Mcp { lambda: 1.0, b: Some(2.0), rho: Some(0.5) };
        assert!(g.build().is_err());
        let g = NonsmoothSpec::Mcp { lambda: 1.0, b: None, rho: Some(0.5) };
        assert_eq!(g.build().unwrap().semiconvex_rho(), Some(0.5));
    }
}
