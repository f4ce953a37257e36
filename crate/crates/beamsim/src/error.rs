use thiserror::Error;

/// Failure of a CLI run, mapped onto the process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] beamsim_core::Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// 2 when a scheme cannot produce AWVs for the configured scenario, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_infeasibility() => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
