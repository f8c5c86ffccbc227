use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("vector must have at least one coordinate")]
    Empty,

    #[error("coordinate {index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("bound c[{index}] = {value} is negative")]
    NegativeBound { index: usize, value: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("insufficient data: need at least {needed} records, found {found}")]
    InsufficientData { needed: usize, found: usize },

    #[error("anchor is not a fixed point of v + T (residual {residual:e})")]
    NotAFixedPoint { residual: f64 },

    #[error("operator {0} carries no evaluable function")]
    MissingFunction(String),

    #[error("value monitors need a test point y in dom f and v + dom g")]
    MissingTestPoint,

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("iterate became non-finite at iteration {iteration}")]
    NonFiniteIterate { iteration: usize },

    #[error("every grid point is infeasible")]
    AllInfinite,

    #[error("unsupported set: {0}")]
    UnsupportedSet(String),

    #[error("vector a is not orthogonal to U (max |<a, b_j>| = {residual:e})")]
    NotOrthogonal { residual: f64 },

    #[error("vector b does not lie in U (distance {residual:e})")]
    NotInSubspace { residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
