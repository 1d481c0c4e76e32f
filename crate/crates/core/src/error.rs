use thiserror::Error;

/// Errors produced anywhere in the fitting pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter {value} lies outside [0, 1]")]
    OutOfDomain { value: f64 },

    #[error("invalid knot vector: {0}")]
    InvalidKnots(String),

    #[error("derivative order {order} exceeds degree {degree}")]
    InvalidOrder { order: usize, degree: usize },

    #[error("multi-index component {component} has value {value}, expected < {bound}")]
    IndexOutOfRange {
        component: usize,
        value: usize,
        bound: usize,
    },

    #[error("flat index {index} out of range for {len} entries")]
    FlatIndexOutOfRange { index: usize, len: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate domain: dimension {dim} has zero width")]
    DegenerateDomain { dim: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(
        "column {column} cannot be regularized with order-{order} terms: \
         its derivative column sum is zero while its data column sum is {col_sum}"
    )]
    Unregularizable {
        column: usize,
        order: usize,
        col_sum: f64,
    },

    #[error(
        "normal matrix is numerically rank-deficient at column {column} (pivot {pivot:e}); \
         increase the regularization threshold"
    )]
    RankDeficient { column: usize, pivot: f64 },

    #[error(
        "iterative solver did not converge after {iterations} iterations \
         (relative residual {residual:e})"
    )]
    NotConverged { iterations: usize, residual: f64 },

    #[error("region contains no lattice points of the model domain")]
    EmptyRegion,

    #[error("unsupported problem size: {0}")]
    Capability(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerical core (as opposed to bad input).
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Unregularizable { .. }
                | Error::RankDeficient { .. }
                | Error::NotConverged { .. }
                | Error::Capability(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
