use thiserror::Error;

use crate::experiment::config::ConfigError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// All four states were eliminated; the trial is already inconclusive.
    #[error("no hypothesis left to test: all four states eliminated")]
    NoHypothesis,

    #[error("exact enumeration limited to {cap} stages, got {stages}")]
    ResourceLimit { stages: usize, cap: usize },

    #[error("failed to converge: {0}")]
    Convergence(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("{} configuration error(s):\n{}", .0.len(), render_config_errors(.0))]
    Config(Vec<ConfigError>),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Validation failures (exit code 1) as opposed to runtime or numeric failures (exit code 2).
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidConfig(_) | Error::Config(_) | Error::UnknownPreset(_) | Error::ResourceLimit { .. }
        )
    }
}

fn render_config_errors(errors: &[ConfigError]) -> String {
    errors.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n")
}

pub type Result<T> = std::result::Result<T, Error>;
