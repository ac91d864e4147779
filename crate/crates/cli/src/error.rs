use std::path::PathBuf;

use thiserror::Error;

/// Failures of a CLI invocation, each with a stable exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("solver error: {0}")]
    Solver(vbpg_core::Error),

    #[error("unmet requirements:\n  {}", .0.join("\n  "))]
    Capability(Vec<String>),

    #[error("failing checks: {}", .0.join(", "))]
    ChecksFailed(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::ChecksFailed(_) => 1,
            Self::Config(_) | Self::Output { .. } => 2,
            Self::Solver(_) => 3,
            Self::Capability(_) => 4,
        }
    }

    pub fn output(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Output {
            path: path.into(),
            source,
        }
    }
}

impl From<vbpg_core::Error> for CliError {
    fn from(e: vbpg_core::Error) -> Self {
        match e {
            vbpg_core::Error::Capability(what) => Self::Capability(vec![what]),
            other => Self::Solver(other),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_are_stable() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(CliError::from(vbpg_core::Error::InvalidArgument("x".into())).exit_code(), 3);
        assert_eq!(CliError::from(vbpg_core::Error::Capability("x".into())).exit_code(), 4);
        assert_eq!(CliError::ChecksFailed(vec!["c1".into()]).exit_code(), 1);
    }
}
