//! Error type with the exit-code contract: 2 for bad input, 3 for a failing
//! backend.

use std::fmt;

use ctxreward::analytics::AnalyticsError;
use ctxreward::context::ContextError;
use ctxreward::correspondence::CorrespondenceError;
use ctxreward::dataset::DatasetError;
use ctxreward::model::ModelError;
use ctxreward::quality::QualityError;
use ctxreward::records::RecordError;
use ctxreward::reward::RewardError;
use ctxreward::segmentation::SegmentationError;
use ctxreward::transport::TransportError;

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_BACKEND: i32 = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    Input(String),
    Backend(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Backend(_) => EXIT_BACKEND,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(msg) => write!(f, "input error: {msg}"),
            CliError::Backend(msg) => write!(f, "backend error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

fn input(err: impl fmt::Display) -> CliError {
    CliError::Input(err.to_string())
}

fn backend(err: impl fmt::Display) -> CliError {
    CliError::Backend(err.to_string())
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        input(err)
    }
}

impl From<RecordError> for CliError {
    fn from(err: RecordError) -> Self {
        input(err)
    }
}

impl From<ModelError> for CliError {
    fn from(err: ModelError) -> Self {
        input(err)
    }
}

impl From<SegmentationError> for CliError {
    fn from(err: SegmentationError) -> Self {
        input(err)
    }
}

impl From<TransportError> for CliError {
    fn from(err: TransportError) -> Self {
        backend(err)
    }
}

impl From<CorrespondenceError> for CliError {
    fn from(err: CorrespondenceError) -> Self {
        match err {
            CorrespondenceError::EmptyInput | CorrespondenceError::InvalidRules(_) => input(err),
            _ => backend(err),
        }
    }
}

impl From<QualityError> for CliError {
    fn from(err: QualityError) -> Self {
        match err {
            QualityError::EmptyReview => input(err),
            _ => backend(err),
        }
    }
}

impl From<RewardError> for CliError {
    fn from(err: RewardError) -> Self {
        match err {
            RewardError::Quality(e) => e.into(),
            RewardError::Correspondence(e) => e.into(),
            other => input(other),
        }
    }
}

impl From<ContextError> for CliError {
    fn from(err: ContextError) -> Self {
        match err {
            ContextError::ClientFailure(_)
            | ContextError::Transport(_)
            | ContextError::InvalidResponse(_)
            | ContextError::Cache(_) => backend(err),
            _ => input(err),
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(err: DatasetError) -> Self {
        match err {
            DatasetError::Correspondence(e) => e.into(),
            DatasetError::Context(e) => e.into(),
            DatasetError::UnparseableLabel(_) | DatasetError::OutOfRangeLabel(_) => backend(err),
            other => input(other),
        }
    }
}

impl From<AnalyticsError> for CliError {
    fn from(err: AnalyticsError) -> Self {
        match err {
            AnalyticsError::Reward(e) => e.into(),
            other => input(other),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_origin() {
        assert_eq!(CliError::from(QualityError::EmptyReview).exit_code(), 2);
        assert_eq!(CliError::from(RewardError::GroupTooSmall(1)).exit_code(), 2);
        let down = TransportError::Unreachable("x".into());
        assert_eq!(CliError::from(RewardError::Correspondence(CorrespondenceError::BackendUnavailable(down.clone()))).exit_code(), 3);
        assert_eq!(CliError::from(ContextError::Transport(down)).exit_code(), 3);
        assert_eq!(CliError::from(ContextError::EmptyContext).exit_code(), 2);
        assert_eq!(CliError::from(DatasetError::UnparseableLabel("?".into())).exit_code(), 3);
    }
}
