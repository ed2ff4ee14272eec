use thiserror::Error;

/// Errors raised by the numerical kernels, solvers and selection tools.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is rank deficient: |R[{column},{column}]| = {diag:e} below tolerance {tol:e}")]
    RankDeficient { column: usize, diag: f64, tol: f64 },

    #[error("matrix is singular: pivot {pivot:e} at row {row}")]
    Singular { row: usize, pivot: f64 },

    #[error("matrix is not positive definite: pivot {pivot:e} at row {row}")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("invalid coefficient: kappa = {value} at {point:?}")]
    InvalidCoefficient { value: f64, point: Vec<f64> },

    #[error("grid size error: {0}")]
    GridSize(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("smoother inapplicable: zero diagonal entry in row {row}")]
    ZeroDiagonal { row: usize },

    #[error("spectral radius estimate failed to converge after {iterations} iterations")]
    EstimateFailed { iterations: usize },

    #[error("basis load error: {0}")]
    BasisLoad(String),

    #[error("coarse operator is singular: {0}")]
    CoarseSingular(String),

    #[error("{method} breakdown: {scalar} vanished ({value:e})")]
    Breakdown {
        method: &'static str,
        scalar: &'static str,
        value: f64,
    },

    #[error("solver {config} diverged at iteration {iteration}: residual ratio {ratio:e}")]
    Divergence {
        config: String,
        iteration: usize,
        ratio: f64,
    },

    #[error("measurement error: {0}")]
    Measurement(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("point {0} is not on the strong Pareto front")]
    NotOnFront(String),

    #[error("unknown id: {0}")]
    UnknownId(String),
}

pub type Result<T> = std::result::Result<T, Error>;
