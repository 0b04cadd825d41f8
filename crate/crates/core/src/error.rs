use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("block {block} is not Hermitian (residual {residual:.3e})")]
    NotHermitian { block: usize, residual: f64 },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("eigendecomposition of block {block} did not converge within {iterations} iterations")]
    EigenNoConvergence { block: usize, iterations: usize },

    #[error("block {block} lost positive definiteness")]
    NotPositiveDefinite { block: usize },

    #[error("infeasible point: {0}")]
    Infeasible(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("gradient has zero norm")]
    ZeroGradient,

    #[error("cannot combine runs: {0}")]
    MixedRuns(String),
}
