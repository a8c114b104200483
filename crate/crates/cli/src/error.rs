use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    /// The problem has no certificate or the plant cannot be stabilized.
    #[error("{0}")]
    Infeasible(String),
    #[error("{0}")]
    Solver(String),
    #[error("{0}")]
    Core(qsdc_core::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Io { .. } | CliError::Core(_) => 1,
            CliError::Infeasible(_) => 2,
            CliError::Solver(_) => 3,
        }
    }
}

impl From<qsdc_core::Error> for CliError {
    fn from(e: qsdc_core::Error) -> Self {
        use qsdc_core::Error as E;
        match e {
            E::NotStabilizable | E::Infeasible(_) => CliError::Infeasible(e.to_string()),
            E::Solver(_) => CliError::Solver(e.to_string()),
            other => CliError::Core(other),
        }
    }
}
