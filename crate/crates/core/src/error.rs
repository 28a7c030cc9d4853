use thiserror::Error;

/// Failure modes shared by every stage of the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input data.
    #[error("invalid input: {0}")]
    Invalid(String),
    /// Input is well formed but violates a stated requirement of the operation.
    #[error("precondition failed: {0}")]
    Precondition(String),
    /// A randomised stage ran out of attempts.
    #[error("{stage} exhausted its budget of {budget}: {detail}")]
    Budget {
        stage: &'static str,
        budget: usize,
        detail: String,
    },
    /// No perfect matching exists; `violator` is a left set with too few neighbours.
    #[error("no perfect matching: left set of size {} has {} neighbours", violator.len(), neighbourhood)]
    NoPerfectMatching {
        violator: Vec<usize>,
        neighbourhood: usize,
    },
    /// Something that must hold by construction did not.
    #[error("invariant breach: {0}")]
    Invariant(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invalid(_) | Error::Precondition(_) | Error::Json(_) => 2,
            Error::Budget { .. } | Error::NoPerfectMatching { .. } => 3,
            Error::Invariant(_) => 1,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn pre(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn budget(stage: &'static str, budget: usize, detail: impl Into<String>) -> Self {
        Error::Budget {
            stage,
            budget,
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
