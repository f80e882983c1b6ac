use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("field lives on a different grid than expected")]
    GridMismatch,

    #[error("non-positive density value {value:e} in cell {cell}")]
    NonPositive { cell: usize, value: f64 },

    #[error("normalization constant not bracketed in [{lo}, {hi}]")]
    NormalizationBracket { lo: f64, hi: f64 },

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid initial condition: {0}")]
    InvalidInitialCondition(String),

    #[error("newton iteration did not converge after {iterations} iterations (relative residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("damping reached 2^-20 without a positive iterate")]
    PositivityLoss,

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("time step {step} failed: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("energy-law regime mismatch: {0}")]
    RegimeMismatch(String),

    #[error("decay fit: {0}")]
    Fit(String),
}
