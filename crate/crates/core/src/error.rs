use crate::adversaries::AdversaryError;
use crate::concepts::ClassError;
use crate::learners::LearnerError;
use crate::reductions::ReductionError;
use crate::subsampling::SampleError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("config: {0}")]
    Config(String),
    #[error("class: {0}")]
    Class(#[from] ClassError),
    #[error("adversary: {0}")]
    Adversary(#[from] AdversaryError),
    #[error("sample: {0}")]
    Sample(#[from] SampleError),
    #[error("invariant violation: {0}")]
    Invariant(String),
    #[error("verification failed: {0}")]
    Verify(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Verify(_) => 1,
            Error::Invariant(_) => 3,
            _ => 2,
        }
    }
}

impl From<LearnerError> for Error {
    fn from(e: LearnerError) -> Self {
        match e {
            LearnerError::EmptyVersionSpace => Error::Invariant(e.to_string()),
            other => Error::Config(other.to_string()),
        }
    }
}

impl From<ReductionError> for Error {
    fn from(e: ReductionError) -> Self {
        match e {
            ReductionError::Capability(msg) => Error::Config(msg),
            ReductionError::Learner(l) => l.into(),
            other => Error::Invariant(other.to_string()),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
