use thiserror::Error;

/// Failures of a command, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("{context}: {source}")]
    Input {
        context: String,
        #[source]
        source: matbp::Error,
    },

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },

    #[error("training failed: {0}")]
    Training(#[source] matbp::Error),

    #[error("rank lemma violated at epoch {epoch}, step {step}: J2 = {objective}, rank(W) = {rank_w}, rank(EE^T) = {rank_target}")]
    LemmaViolation {
        epoch: usize,
        step: usize,
        objective: f64,
        rank_w: usize,
        rank_target: usize,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Training(_) => 1,
            CliError::Config { .. } | CliError::Input { .. } | CliError::Io { .. } => 2,
            CliError::LemmaViolation { .. } => 3,
        }
    }

    pub(crate) fn input(context: impl Into<String>, source: matbp::Error) -> Self {
        CliError::Input {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}
