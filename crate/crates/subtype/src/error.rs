use std::fmt;

use subtype_core::Error;

use crate::io::IoError;

/// Failure of a command, carrying its process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, configuration or missing inputs (exit 2).
    Usage(String),
    /// Input data that cannot be used (exit 3).
    Data(String),
    /// A broken internal invariant (exit 4).
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Internal(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Open { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let m = e.to_string();
        match e {
            Error::InvalidFilterPolicy { .. }
            | Error::InvalidThreshold { .. }
            | Error::InvalidConfig(_)
            | Error::ZeroRounds
            | Error::TooManyNodes { .. } => CliError::Usage(m),
            Error::UnknownUser(_)
            | Error::NoOutgoingCalls(_)
            | Error::MissingCalleeLabel { .. }
            | Error::InsufficientClass { .. }
            | Error::MissingClass(_)
            | Error::TooFewExamples { .. }
            | Error::NoWeakLearner
            | Error::MissingTruth(_)
            | Error::ZeroOutDegree
            | Error::InvalidBipartite(_)
            | Error::EmptyEdgeSet
            | Error::ContradictoryFixedLabels => CliError::Data(m),
            Error::DimensionMismatch { .. }
            | Error::LengthMismatch { .. }
            | Error::PosteriorOutOfRange(_)
            | Error::InvalidProblem(_) => CliError::Internal(m),
        }
    }
}
