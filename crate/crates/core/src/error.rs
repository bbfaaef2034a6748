use thiserror::Error;

/// Errors raised by tensor kernels, oracles and solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CpError {
    #[error("mode {mode} out of range for order-{order} tensor")]
    ModeOutOfRange { mode: usize, order: usize },
    #[error("invalid dimensions: {0}")]
    InvalidDims(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("division by zero entry at ({row}, {col})")]
    DivisionByZero { row: usize, col: usize },
    #[error("data tensor has zero Frobenius norm")]
    ZeroNorm,
    #[error("component {component} has a zero-norm vector in mode {mode}")]
    ZeroComponent { component: usize, mode: usize },
    #[error("dense oracle refused: {jacobian_entries} Jacobian entries, {params} parameters")]
    SizeGuard { jacobian_entries: usize, params: usize },
    #[error("kernel matrix is numerically singular (min/max |gamma| = {ratio:e})")]
    SingularKernel { ratio: f64 },
    #[error("singular linear system: {0}")]
    Singular(String),
    #[error("rank {rank} exceeds smallest dimension {min_dim}")]
    RankTooLarge { rank: usize, min_dim: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("iteration {iter}: {source}")]
    AtIteration {
        iter: usize,
        #[source]
        source: Box<CpError>,
    },
}

pub type Result<T> = std::result::Result<T, CpError>;

pub(crate) fn check_mode(mode: usize, order: usize) -> Result<()> {
    if mode >= order {
        Err(CpError::ModeOutOfRange { mode, order })
    } else {
        Ok(())
    }
}
