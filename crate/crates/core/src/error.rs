use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("argument must be positive, got {0}")]
    NonPositiveArgument(f64),

    #[error("integrand is not integrable: {0}")]
    NonIntegrable(String),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value at node {0}")]
    NonFinite(usize),

    #[error("grid functions live on different grids")]
    GridMismatch,

    #[error("iteration diverged after {iterations} steps (norm {norm:e})")]
    Divergence { iterations: usize, norm: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
