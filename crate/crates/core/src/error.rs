use thiserror::Error;

/// Errors raised by the beamforming library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("matrix is not Hermitian positive semidefinite within tolerance")]
    NotHermitianPsd,
    #[error("rank-deficient Gram matrix (reciprocal condition {rcond:.3e})")]
    RankDeficient { rcond: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("degenerate group in segment {segment}: member sum cancels")]
    DegenerateGroup { segment: usize },
    #[error("{scheme} failed on draw {trial}: {source}")]
    DrawFailed {
        scheme: &'static str,
        trial: u64,
        source: Box<Error>,
    },
}

impl Error {
    /// True for errors that signal a scheme cannot produce AWVs for a channel,
    /// as opposed to a caller bug.
    pub fn is_infeasibility(&self) -> bool {
        match self {
            Error::RankDeficient { .. } | Error::Infeasible(_) | Error::DegenerateGroup { .. } => {
                true
            }
            Error::DrawFailed { source, .. } => source.is_infeasibility(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
