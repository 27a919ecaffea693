use alloc::string::String;

/// Errors produced by the estimation pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// An estimator was evaluated before any observation was absorbed.
    #[error("no data")]
    NoData,
    #[error("insufficient data: need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },
    /// Eigenvalue `index` (descending order) fell below the admissible floor.
    #[error("singular covariance: eigenvalue #{index} = {value:e} is below the floor")]
    SingularCovariance { index: usize, value: f64 },
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
