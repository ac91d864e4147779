//! Experiment configuration files.
//!
//! ```json
//! {"problem": {"corpus": "QUAD_SC(2,10)"},
//!  "eps": 0.09,
//!  "x0": [0.5, -0.5],
//!  "max_iters": 200,
//!  "diagnostics": [{"condition": "LEVEL_SET_SUBDIFF", "exponent": 1.0}]}
//! ```

use std::path::Path;

use ndarray::Array1;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use vbpg_core::bregman::{BregmanStep, KernelSpec};
use vbpg_core::corpus::{load_corpus, CorpusEntry, EntryProblem};
use vbpg_core::diagnostics::{Condition, Region, Sampler};
use vbpg_core::problem::spec::InlineProblem;
use vbpg_core::problem::{derive_constants, Objective};
use vbpg_core::solver::{EpsSchedule, KernelSchedule, VbpgConfig};
use vbpg_core::{Point, Problem};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemSource {
    Corpus(String),
    Inline(InlineProblem),
}

/// A constant step or an explicit schedule with declared bounds.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EpsConfig {
    Constant(f64),
    Schedule {
        values: Vec<f64>,
        #[serde(default)]
        lo: Option<f64>,
        #[serde(default)]
        hi: Option<f64>,
    },
}

impl EpsConfig {
    fn build(&self) -> CliResult<EpsSchedule<f64>> {
        let schedule = match self {
            Self::Constant(e) => EpsSchedule::constant(*e),
            Self::Schedule { values, lo, hi } => {
                let min = values.iter().copied().fold(f64::INFINITY, f64::min);
                let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let (lo, hi) = (lo.unwrap_or(min), hi.unwrap_or(max));
                if values.iter().any(|&v| v < lo || v > hi) {
                    return Err(CliError::Config(format!("eps values must lie in [{lo}, {hi}]")));
                }
                EpsSchedule::sequence(values.clone(), lo, hi)
            }
        };
        schedule.map_err(|e| CliError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleSpec {
    Analytic,
    SolutionSet,
    Grid { h: f64 },
}

/// Region `𝔅(x̄; η, ν)`; omitted fields come from the entry's first
/// recommended region.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    #[serde(default)]
    pub center: Option<Vec<f64>>,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub nu: Option<f64>,
    #[serde(default)]
    pub f_bar: Option<f64>,
}

/// Designated test sequence: explicit points or a counterexample witness
/// sequence.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceSpec {
    #[serde(default)]
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub witness: Option<String>,
    #[serde(default)]
    pub n: Option<Vec<u64>>,
    #[serde(default)]
    pub f_bar: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertRequest {
    pub condition: Condition,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub region: Option<RegionSpec>,
    #[serde(default)]
    pub sequence: Option<SequenceSpec>,
    /// `γ`, `p`, `α` or `q`, depending on the condition.
    #[serde(default)]
    pub exponent: Option<f64>,
    #[serde(default)]
    pub oracle: Option<OracleSpec>,
    #[serde(default)]
    pub candidate: Option<f64>,
    #[serde(default)]
    pub xi: Option<f64>,
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub n_samples: Option<usize>,
}

impl CertRequest {
    pub fn label(&self, index: usize) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| format!("{index:02}_{}", serde_json::to_value(self.condition).ok().and_then(|v| v.as_str().map(str::to_lowercase)).unwrap_or_default()))
    }
}

fn default_max_iters() -> usize {
    200
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSource,
    #[serde(default)]
    pub kernel: Option<KernelSpec>,
    /// Defaults to the corpus entry's recommended step.
    #[serde(default)]
    pub eps: Option<EpsConfig>,
    /// Defaults to a seeded draw from the corpus entry's working box.
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default)]
    pub stop_tol: Option<f64>,
    #[serde(default)]
    pub diagnostics: Vec<CertRequest>,
    #[serde(default)]
    pub seed: u64,
}

/// The problem a config refers to: a composite problem, or a raw corpus
/// function usable only for diagnostics.
pub enum Target {
    Composite { problem: Problem, entry: Option<CorpusEntry> },
    Raw(CorpusEntry),
}

impl Target {
    pub fn objective(&self) -> &dyn Objective<f64> {
        match self {
            Self::Composite { problem, .. } => problem,
            Self::Raw(entry) => entry.objective(),
        }
    }

    pub fn composite(&self) -> CliResult<&Problem> {
        match self {
            Self::Composite { problem, .. } => Ok(problem),
            Self::Raw(entry) => Err(CliError::Capability(vec![format!(
                "{} has no smooth/nonsmooth split",
                entry.id
            )])),
        }
    }

    pub fn entry(&self) -> Option<&CorpusEntry> {
        match self {
            Self::Composite { entry, .. } => entry.as_ref(),
            Self::Raw(entry) => Some(entry),
        }
    }
}

/// A validated configuration with every referenced object built.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub target: Target,
    pub solver: Option<VbpgConfig<f64>>,
    pub step: Option<BregmanStep<f64>>,
    pub x0: Option<Point>,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Parses JSON; syntax errors report line and column.
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| {
            CliError::Config(format!("{} at line {}, column {}", e, e.line(), e.column()))
        })
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.seed = s;
        }
        self
    }

    /// Builds and validates every referenced object.
    pub fn resolve(self) -> CliResult<Experiment> {
        let config_err = |e: vbpg_core::Error| CliError::Config(e.to_string());
        let target = match &self.problem {
            ProblemSource::Corpus(id) => {
                let entry = load_corpus(id).map_err(config_err)?;
                match &entry.problem {
                    EntryProblem::Composite(p) => Target::Composite {
                        problem: p.clone(),
                        entry: Some(entry.clone()),
                    },
                    EntryProblem::Raw(_) => Target::Raw(entry),
                }
            }
            ProblemSource::Inline(spec) => Target::Composite {
                problem: spec.build().map_err(config_err)?,
                entry: None,
            },
        };
        let Target::Composite { problem, entry } = &target else {
            if self.eps.is_some() || self.x0.is_some() {
                return Err(CliError::Config(
                    "raw corpus functions support diagnostics only; drop eps and x0".into(),
                ));
            }
            return Ok(Experiment {
                config: self,
                target,
                solver: None,
                step: None,
                x0: None,
            });
        };

        let kernel = self
            .kernel
            .clone()
            .unwrap_or(KernelSpec::Euclidean)
            .build()
            .map_err(config_err)?;
        let eps = match (&self.eps, entry.as_ref().and_then(|e| e.eps)) {
            (Some(e), _) => e.build()?,
            (None, Some(e)) => EpsSchedule::constant(e).map_err(config_err)?,
            (None, None) => return Err(CliError::Config("inline problems need `eps`".into())),
        };
        // ε̄ < m/L keeps every step in the sufficient-decrease regime.
        let constants = derive_constants(kernel.m(), kernel.big_m(), eps.lo(), eps.hi(), problem.lipschitz(), problem.rho())
            .map_err(config_err)?;
        constants.require_descent().map_err(|e| {
            CliError::Config(format!("{e}; sufficient decrease needs eps_hi < m/L"))
        })?;

        let n = problem.dim();
        let x0 = match (&self.x0, entry) {
            (Some(x), _) => {
                if x.len() != n {
                    return Err(CliError::Config(format!("x0 has dimension {}, problem has {n}", x.len())));
                }
                Array1::from_vec(x.clone())
            }
            (None, Some(entry)) => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                entry.working_box.sample(&mut rng)
            }
            (None, None) => return Err(CliError::Config("inline problems need `x0`".into())),
        };
        if self.max_iters == 0 {
            return Err(CliError::Config("max_iters must be positive".into()));
        }
        let step = BregmanStep::with_bounds(kernel.clone(), eps.at(0), eps.lo(), eps.hi()).map_err(config_err)?;
        let mut solver = VbpgConfig::new(KernelSchedule::Constant(kernel), eps).max_iters(self.max_iters);
        if let Some(tol) = self.stop_tol {
            if tol.is_nan() || tol <= 0.0 {
                return Err(CliError::Config("stop_tol must be positive".into()));
            }
            solver = solver.stop_tol(tol);
        }
        Ok(Experiment {
            config: self,
            target,
            solver: Some(solver),
            step: Some(step),
            x0: Some(x0),
        })
    }
}

impl Experiment {
    /// Region for a request, filling gaps from the entry's first recommended
    /// region. `F̄` defaults to `F(x̄)`.
    pub fn region(&self, spec: Option<&RegionSpec>) -> CliResult<Region<f64>> {
        let spec = spec.cloned().unwrap_or_default();
        let base = self.target.entry().and_then(|e| e.recommended_regions.first().cloned());
        let center = match (&spec.center, &base) {
            (Some(c), _) => Array1::from_vec(c.clone()),
            (None, Some(b)) => b.x_bar.clone(),
            (None, None) => return Err(CliError::Config("region needs a center".into())),
        };
        if center.len() != self.target.objective().dim() {
            return Err(CliError::Config("region center has the wrong dimension".into()));
        }
        let eta = spec.eta.or(base.as_ref().map(|b| b.eta));
        let nu = spec.nu.or(base.as_ref().map(|b| b.nu));
        let (Some(eta), Some(nu)) = (eta, nu) else {
            return Err(CliError::Config("region needs eta and nu".into()));
        };
        let f_bar = match spec.f_bar {
            Some(v) => v,
            None => self.target.objective().objective(center.view()).map_err(CliError::from)?,
        };
        Region::with_level(center, eta, nu, f_bar).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn sampler(&self, request: &CertRequest, index: usize) -> Sampler {
        Sampler::new(request.n_samples.unwrap_or(1000), self.config.seed.wrapping_add(index as u64))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_config_resolves_with_defaults() {
        let cfg = ExperimentConfig::from_json(r#"{"problem": {"corpus": "QUAD_SC(2,10)"}, "eps": 0.09}"#).unwrap();
        let exp = cfg.resolve().unwrap();
        assert_eq!(exp.x0.unwrap().len(), 2);
    }

    #[test]
    fn large_step_is_a_config_error() {
        let cfg = ExperimentConfig::from_json(r#"{"problem": {"corpus": "QUAD_SC(2,10)"}, "eps": 0.2}"#).unwrap();
        let err = cfg.resolve().err().unwrap();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("m/L"));
    }

    #[test]
    fn syntax_errors_report_position() {
        let err = ExperimentConfig::from_json("{\n  \"problem\": ,\n}").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn unknown_corpus_id_is_a_config_error() {
        let cfg = ExperimentConfig::from_json(r#"{"problem": {"corpus": "NOPE"}}"#).unwrap();
        assert_eq!(cfg.resolve().err().unwrap().exit_code(), 2);
    }

    #[test]
    fn inline_problem_needs_start_and_step() {
        let json = r#"{"problem": {"inline": {"f": {"kind": "quadratic", "q": [[1]]}, "g": {"kind": "zero"}}}, "eps": 0.5}"#;
        let err = ExperimentConfig::from_json(json).unwrap().resolve().err().unwrap();
        assert!(err.to_string().contains("x0"));
    }

    #[test]
    fn raw_entries_resolve_for_diagnostics() {
        let cfg = ExperimentConfig::from_json(r#"{"problem": {"corpus": "EX_5_2"}}"#).unwrap();
        let exp = cfg.resolve().unwrap();
        assert!(exp.solver.is_none());
        let region = exp.region(None).unwrap();
        assert_eq!(region.f_bar, 0.0);
    }
}
