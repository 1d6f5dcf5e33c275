use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatError {
    #[error("empty sample")]
    EmptySample,
    #[error("zero variance: {0}")]
    ZeroVariance(&'static str),
    #[error("shape mismatch: {0}")]
    ShapeError(String),
    #[error("insufficient sample: need at least {needed}, got {got}")]
    InsufficientSample { needed: usize, got: usize },
    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),
    #[error("missing data at row {row}, column {column}")]
    MissingData { row: usize, column: usize },
    #[error("design matrix is rank deficient (column {column})")]
    SingularDesign { column: usize },
    #[error("degenerate fit: full model explains all variance")]
    DegenerateFit,
    #[error("matrix is not symmetric (|a_ij - a_ji| = {deviation:e})")]
    NotSymmetric { deviation: f64 },
    #[error("statistic undefined on {skipped} of {iterations} bootstrap replicates")]
    UnstableStatistic { skipped: usize, iterations: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, StatError>;
