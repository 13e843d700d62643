use crate::lp::LpError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("internal solver error: {0}")]
    Solver(#[from] LpError),
    #[error("degenerate body: {0}")]
    DegenerateBody(String),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("quadrature error: {0}")]
    Quadrature(String),
    #[error("no witness: {0}")]
    NoWitness(String),
}
