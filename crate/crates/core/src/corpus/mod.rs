//! Built-in problem instances addressed by string ids such as `EX_5_2`,
//! `QUAD_SC(2,10)` or `LASSO(20,50,0.1,7)`.

mod composite;
mod raw;

use std::ops::Range;

use ndarray::{array, Array1};

pub use raw::{
    ex53_prox_reference, local_prox_grid, staircase_subdiff_dist, staircase_value, RawFunction,
    EX53_REGIME_RADIUS,
};

use crate::diagnostics::Region;
use crate::error::{Error, Result};
use crate::problem::{critical_point_consistency, validate_problem, BoxDomain, CompositeProblem, Objective};
use crate::solver::even_blocks;

/// Either a composite `f + g` or a raw piecewise function.
#[derive(Debug, Clone)]
pub enum EntryProblem {
    Composite(CompositeProblem<f64>),
    Raw(RawFunction),
}

/// Block layout and regularization for the Jacobi instance.
#[derive(Debug, Clone)]
pub struct JacobiLayout {
    pub blocks: Vec<Range<usize>>,
    pub c: Vec<f64>,
    pub eps: f64,
}

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub id: String,
    pub problem: EntryProblem,
    /// Box used for validation and for drawing starting points.
    pub working_box: BoxDomain<f64>,
    pub recommended_regions: Vec<Region<f64>>,
    /// Euclidean step in the descent regime (`ε < 1/L`); `None` for raw
    /// functions.
    pub eps: Option<f64>,
    pub jacobi: Option<JacobiLayout>,
    pub notes: String,
}

impl CorpusEntry {
    pub fn objective(&self) -> &dyn Objective<f64> {
        match &self.problem {
            EntryProblem::Composite(p) => p,
            EntryProblem::Raw(r) => r,
        }
    }

    pub fn composite(&self) -> Result<&CompositeProblem<f64>> {
        match &self.problem {
            EntryProblem::Composite(p) => Ok(p),
            EntryProblem::Raw(_) => Err(Error::Capability(format!(
                "{} is a raw piecewise function without an f + g split",
                self.id
            ))),
        }
    }

    pub fn raw(&self) -> Option<&RawFunction> {
        match &self.problem {
            EntryProblem::Raw(r) => Some(r),
            EntryProblem::Composite(_) => None,
        }
    }
}

/// Family names with their parameter lists, as accepted by [`load_corpus`].
pub const CORPUS_IDS: [&str; 9] = [
    "EX_5_1",
    "EX_5_2",
    "EX_5_3",
    "QUAD_SC(n,kappa)",
    "LASSO(m,n,lambda,seed)",
    "QUAD_L1(n,lambda)",
    "QUAD_MCP(n,lambda,rho)",
    "TWO_WELL",
    "JACOBI_BLOCK(n,blocks,seed)",
];

/// Composite entries at their default parameters.
pub const COMPOSITE_DEFAULTS: [&str; 6] = ["QUAD_SC", "LASSO", "QUAD_L1", "QUAD_MCP", "TWO_WELL", "JACOBI_BLOCK"];

fn unknown(id: &str) -> Error {
    Error::UnknownCorpus {
        id: id.to_string(),
        valid: CORPUS_IDS.iter().map(|s| s.to_string()).collect(),
    }
}

/// Splits `NAME(a,b,…)` into the name and numeric arguments.
fn parse_id(id: &str) -> Result<(String, Vec<f64>)> {
    let id = id.trim();
    let Some(open) = id.find('(') else {
        return Ok((id.to_string(), Vec::new()));
    };
    let name = id[..open].trim().to_string();
    let inner = id[open + 1..].strip_suffix(')').ok_or_else(|| unknown(id))?;
    let args = inner
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| unknown(id)))
        .collect::<Result<Vec<_>>>()?;
    if args.iter().any(|v| !v.is_finite()) {
        return Err(unknown(id));
    }
    Ok((name, args))
}

/// Fills missing trailing arguments from `defaults`.
fn with_defaults(id: &str, args: Vec<f64>, defaults: &[f64]) -> Result<Vec<f64>> {
    if args.len() > defaults.len() {
        return Err(Error::InvalidArgument(format!(
            "{id}: expected at most {} parameters, got {}",
            defaults.len(),
            args.len()
        )));
    }
    let mut out = args;
    out.extend_from_slice(&defaults[out.len()..]);
    Ok(out)
}

fn count(id: &str, v: f64) -> Result<usize> {
    if v >= 1.0 && v.fract() == 0.0 && v <= 1e6 {
        Ok(v as usize)
    } else {
        Err(Error::InvalidArgument(format!("{id}: {v} is not a positive integer")))
    }
}

fn composite_entry(
    id: String,
    p: CompositeProblem<f64>,
    working_box: BoxDomain<f64>,
    regions: impl FnOnce(&CompositeProblem<f64>) -> Result<Vec<Region<f64>>>,
    notes: &str,
) -> Result<CorpusEntry> {
    let eps = 0.9 / p.lipschitz().max(f64::MIN_POSITIVE);
    let report = validate_problem(&p, &working_box, 200, 0)?;
    if !report.passed() {
        return Err(Error::Hypothesis(format!(
            "{id}: {} sampled pairs violate the declared constants",
            report.violations.len()
        )));
    }
    let bad = critical_point_consistency(&p, 1e-10)?;
    if let Some((x, d)) = bad.first() {
        return Err(Error::Hypothesis(format!(
            "{id}: listed critical point {x} has subgradient distance {d:e}"
        )));
    }
    Ok(CorpusEntry {
        recommended_regions: regions(&p)?,
        id,
        problem: EntryProblem::Composite(p),
        working_box,
        eps: Some(eps),
        jacobi: None,
        notes: notes.to_string(),
    })
}

fn minimizer(p: &CompositeProblem<f64>) -> Array1<f64> {
    let set = p.analytic().solution_set.as_ref().expect("entry has a solution set");
    set.project(Array1::zeros(p.dim()).view()).expect("non-empty solution set")
}

/// Loads a corpus entry. Parameters may be omitted from the right, e.g.
/// `QUAD_SC` is `QUAD_SC(2,10)`.
pub fn load_corpus(id: &str) -> Result<CorpusEntry> {
    let (name, args) = parse_id(id)?;
    let canonical = |vals: &[f64]| {
        if vals.is_empty() {
            name.clone()
        } else {
            let parts: Vec<String> = vals.iter().map(|v| format!("{v}")).collect();
            format!("{name}({})", parts.join(","))
        }
    };
    match name.as_str() {
        "EX_5_1" | "EX_5_3" if args.is_empty() => {
            let f = raw::cubic_seam(if name == "EX_5_1" { "ex_5_1" } else { "ex_5_3" });
            let region = Region::new(&f, array![0.0, 0.0], 0.1, 1.0)?;
            Ok(CorpusEntry {
                id: name.clone(),
                problem: EntryProblem::Raw(f),
                working_box: BoxDomain::uniform(2, -0.5, 0.5)?,
                recommended_regions: vec![region],
                eps: None,
                jacobi: None,
                notes: "cubic seam function; critical set encoded as the origin (every seam point (a, 0) \
                        also has 0 in its proximal subdifferential)"
                    .into(),
            })
        }
        "EX_5_2" if args.is_empty() => {
            let f = raw::staircase();
            let region = Region::new(&f, array![0.0], 0.5, 1.0)?;
            Ok(CorpusEntry {
                id: name.clone(),
                problem: EntryProblem::Raw(f),
                working_box: BoxDomain::uniform(1, -1.0, 1.0)?,
                recommended_regions: vec![region],
                eps: None,
                jacobi: None,
                notes: "lower semicontinuous staircase with interval subdifferential at breakpoints".into(),
            })
        }
        "QUAD_SC" => {
            let a = with_defaults(id, args, &[2.0, 10.0])?;
            let (n, kappa) = (count(id, a[0])?, a[1]);
            composite_entry(
                canonical(&a),
                composite::quad_sc(n, kappa)?,
                BoxDomain::uniform(n, -1.0, 1.0)?,
                |p| Ok(vec![Region::new(p, Array1::zeros(n), 1.0, kappa)?]),
                "strongly convex diagonal quadratic, minimizer 0",
            )
        }
        "QUAD_L1" => {
            let a = with_defaults(id, args, &[4.0, 0.75])?;
            let n = count(id, a[0])?;
            composite_entry(
                canonical(&a),
                composite::quad_l1(n, a[1])?,
                BoxDomain::uniform(n, -2.0, 2.0)?,
                |p| Ok(vec![Region::new(p, minimizer(p), 1.0, 10.0)?]),
                "diagonal quadratic plus l1, minimizer by soft-thresholding",
            )
        }
        "QUAD_MCP" => {
            let a = with_defaults(id, args, &[2.0, 0.5, 0.5])?;
            let n = count(id, a[0])?;
            composite_entry(
                canonical(&a),
                composite::quad_mcp(n, a[1], a[2])?,
                BoxDomain::uniform(n, -2.0, 2.0)?,
                |p| Ok(vec![Region::new(p, minimizer(p), 0.5, 10.0)?]),
                "diagonal quadratic plus MCP with curvature above the semiconvexity modulus",
            )
        }
        "LASSO" => {
            let a = with_defaults(id, args, &[20.0, 50.0, 0.1, 7.0])?;
            let (m, n) = (count(id, a[0])?, count(id, a[1])?);
            let seed = a[3] as u64;
            composite_entry(
                canonical(&a),
                composite::lasso(m, n, a[2], seed)?,
                BoxDomain::uniform(n, -1.0, 1.0)?,
                |p| Ok(vec![Region::new(p, minimizer(p), 1.0, 1.0)?]),
                "seeded Gaussian lasso; minimizer from a polished high-accuracy solve",
            )
        }
        "TWO_WELL" if args.is_empty() => composite_entry(
            name.clone(),
            composite::two_well()?,
            BoxDomain::uniform(1, -2.0, 3.0)?,
            |p| {
                Ok(vec![
                    Region::new(p, array![-1.0], 0.5, 1.0)?,
                    Region::new(p, array![2.0], 0.5, 1.0)?,
                ])
            },
            "quartic with minima at -1 (F = 0) and 2 (F = -1) and a local maximum at 0 (F = 5/27)",
        ),
        "JACOBI_BLOCK" => {
            let a = with_defaults(id, args, &[40.0, 4.0, 7.0])?;
            let (n, count_blocks) = (count(id, a[0])?, count(id, a[1])?);
            if count_blocks > n {
                return Err(Error::InvalidArgument(format!("{id}: more blocks than coordinates")));
            }
            let p = composite::jacobi_block(n, a[2] as u64)?;
            let lip = p.lipschitz();
            let mut entry = composite_entry(
                canonical(&a),
                p,
                BoxDomain::uniform(n, -1.0, 1.0)?,
                |p| Ok(vec![Region::new(p, minimizer(p), 1.0, 1.0)?]),
                "block lasso for the regularized Jacobi scheme, per-block weight c = L",
            )?;
            entry.jacobi = Some(JacobiLayout {
                blocks: even_blocks(n, count_blocks),
                c: vec![lip; count_blocks],
                eps: 0.5,
            });
            Ok(entry)
        }
        _ => Err(unknown(id)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::objective;

    #[test]
    fn listed_examples() {
        let e = load_corpus("EX_5_2").unwrap();
        assert!((e.objective().objective(array![0.7].view()).unwrap() - 0.74).abs() < 1e-15);
        let e = load_corpus("EX_5_1").unwrap();
        assert_eq!(e.objective().objective(array![1.0, -1.0].view()).unwrap(), -1.0);
        let e = load_corpus("QUAD_SC(2, 10)").unwrap();
        let p = e.composite().unwrap();
        assert_eq!(e.id, "QUAD_SC(2,10)");
        assert_eq!(objective(p, array![1.0, 1.0].view()).unwrap(), 5.5);
        assert_eq!(p.analytic().optimal_value, Some(0.0));
    }

    #[test]
    fn defaults_and_partial_parameters() {
        assert_eq!(load_corpus("QUAD_SC").unwrap().id, "QUAD_SC(2,10)");
        assert_eq!(load_corpus("QUAD_SC(3)").unwrap().id, "QUAD_SC(3,10)");
        let j = load_corpus("JACOBI_BLOCK(40,4,7)").unwrap();
        assert_eq!(j.jacobi.unwrap().blocks.len(), 4);
    }

    #[test]
    fn unknown_ids_list_the_valid_ones() {
        for bad in ["NOPE", "EX_5_1(3)", "QUAD_SC(2,", "QUAD_SC(a)"] {
            match load_corpus(bad) {
                Err(Error::UnknownCorpus { valid, .. }) => assert!(valid.iter().any(|v| v == "TWO_WELL")),
                other => panic!("{bad}: {other:?}"),
            }
        }
        assert!(matches!(load_corpus("QUAD_SC(2,10,1)"), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn entries_are_deterministic() {
        let a = load_corpus("LASSO(10,15,0.1,3)").unwrap();
        let b = load_corpus("LASSO(10,15,0.1,3)").unwrap();
        let (pa, pb) = (a.composite().unwrap(), b.composite().unwrap());
        let x = Array1::from_elem(15, 0.3);
        assert_eq!(objective(pa, x.view()).unwrap(), objective(pb, x.view()).unwrap());
    }
}
