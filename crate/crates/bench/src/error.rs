use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("config: {0}")]
    Config(String),

    /// The validator rejected the schedule; holds the formatted report.
    #[error("schedule validation failed (rerun with --force to override):\n{0}")]
    Schedule(String),

    #[error("run diverged: {0}")]
    Divergence(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] pdsg::Error),
}

impl BenchError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        BenchError::Io { path: path.display().to_string(), source }
    }

    /// 0 success, 2 usage or configuration, 3 divergence, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Usage(_) | BenchError::Config(_) | BenchError::Schedule(_) => 2,
            BenchError::Divergence(_) => 3,
            BenchError::Io { .. } => 4,
            BenchError::Core(e) => match e {
                pdsg::Error::Io(_) | pdsg::Error::Format(_) => 4,
                pdsg::Error::Divergence { .. } => 3,
                _ => 2,
            },
        }
    }
}
