use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("dimension mismatch between generators {first} and {second} ({dim_first} vs {dim_second})")]
    DimensionMismatch {
        first: usize,
        second: usize,
        dim_first: usize,
        dim_second: usize,
    },

    #[error("generators {first} and {second} do not commute (relative residual {residual:.3e})")]
    NonCommuting {
        first: usize,
        second: usize,
        residual: f64,
    },

    #[error("structure violation at entry ({row}, {col}): {detail}")]
    StructureViolation {
        row: usize,
        col: usize,
        detail: String,
    },

    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    #[error("matrix is not in the image of the block exponential: {0}")]
    NotInExpImage(String),

    #[error("eigensolver failed: {0}")]
    EigensolverFailed(String),

    #[error("branch vector has length {got}, expected {expected}")]
    BranchLengthMismatch { got: usize, expected: usize },

    #[error("relation height {0} exceeds the supported integer range")]
    HeightOverflow(u64),

    #[error("enumeration budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("construction self-check failed: {0}")]
    ConstructionCheckFailed(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
