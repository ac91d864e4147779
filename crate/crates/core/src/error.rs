use thiserror::Error;

/// Errors raised by problem construction, solvers and diagnostics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value of {term} at {point:?}")]
    Domain { term: &'static str, point: Vec<f64> },

    #[error("NaN produced by {term}")]
    Numeric { term: &'static str },

    #[error("regime violated: {0}")]
    Regime(String),

    #[error(
        "non-descent regime: eps_hi={eps_hi} is not below m/L={bound} (m={m}, L={lipschitz}, a={a})"
    )]
    NonDescent {
        m: f64,
        lipschitz: f64,
        eps_hi: f64,
        bound: f64,
        a: f64,
    },

    #[error("inner solver did not converge: residual {residual:e} after {iters} iterations")]
    InnerSolver { residual: f64, iters: usize },

    #[error("iteration {k}: {source}")]
    AtIteration {
        k: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("missing capability: {0}")]
    Capability(String),

    #[error("only {accepted} samples accepted, at least {required} required")]
    InsufficientSamples { accepted: usize, required: usize },

    #[error("target value {target} is not below F={value} at iterate {k}")]
    TargetValue { k: usize, value: f64, target: f64 },

    #[error("hypothesis not met: {0}")]
    Hypothesis(String),

    #[error("outside the regime of the reference formula: {0}")]
    OutOfRegime(String),

    #[error("unknown corpus id `{id}`; valid ids: {}", valid.join(", "))]
    UnknownCorpus { id: String, valid: Vec<String> },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension { expected, found })
    }
}
