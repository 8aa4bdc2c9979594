use crate::expr::{DomainError, ParseError};
use crate::grid::GridPoint;

/// Malformed spec file, located by 1-based line and column.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}, column {column}: {message}")]
pub struct SpecError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("invalid chart: {0}")]
    InvalidChart(String),
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("frame change is singular at {0}")]
    SingularFrame(GridPoint),
    #[error("connection is not flat: max |curvature| {max_curvature:e} exceeds {threshold:e}")]
    NotFlat { max_curvature: f64, threshold: f64 },
    #[error("operands live on different charts")]
    ChartMismatch,
    #[error("volume form vanishes at {0}")]
    DegenerateVolume(GridPoint),
    #[error("curvature coefficient fails the imaginary-eigenvalue condition at {0}")]
    EigenPreconditionFailed(GridPoint),
    #[error("matrix is not symmetric positive definite at {0}")]
    NotSpd(GridPoint),
    #[error("{which} is not compatible with the metric: residual {residual:e} at {witness}")]
    NotCompatible {
        which: String,
        residual: f64,
        witness: GridPoint,
    },
    #[error("precondition violated: {0}")]
    Precondition(String),
}
