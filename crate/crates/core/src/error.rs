use thiserror::Error;

/// Errors produced by the clustering and variable-selection routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("singular data: {0}")]
    SingularData(String),
    #[error("every EM start degenerated ({starts} starts)")]
    DegenerateFit { starts: usize },
    #[error("design matrix is rank deficient (rank < {expected})")]
    RankDeficient { expected: usize },
    #[error("residual covariance is not positive definite")]
    SingularOmega,
    #[error("cluster {0} is empty")]
    EmptyCluster(usize),
    #[error("every between-cluster sum of squares is nonpositive")]
    AllNonpositive,
    #[error("partition lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("role search failed: {0}")]
    SearchFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
