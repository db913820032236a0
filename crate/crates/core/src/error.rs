use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid graph: {0}")]
    Validation(String),

    #[error("graph is disconnected: vertices {first} and {second} lie in different components")]
    Disconnected { first: usize, second: usize },

    #[error("vertex {vertex} out of range for graph with {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "walk series diverges: lambda = {lambda} must exceed the maximum degree {max_degree} \
         (Z is absolutely convergent only for lambda > m)"
    )]
    Divergent { lambda: f64, max_degree: usize },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("eigensolver did not converge after {sweeps} sweeps (residual {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error("work cap exceeded for {what}: estimated {estimate:e} > cap {cap:e}")]
    WorkCap { what: String, estimate: f64, cap: f64 },

    #[error("unreliable eigenvalue gap {gap:e} (error bar {error:e})")]
    UnreliableGap { gap: f64, error: f64 },

    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Numerical,
    NotApplicable,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Parse { .. }
            | Error::Validation(_)
            | Error::Disconnected { .. }
            | Error::VertexOutOfRange { .. }
            | Error::InvalidArgument(_) => ErrorKind::Usage,
            Error::NotApplicable(_) => ErrorKind::NotApplicable,
            Error::Divergent { .. }
            | Error::NoConvergence { .. }
            | Error::WorkCap { .. }
            | Error::UnreliableGap { .. }
            | Error::Inconclusive(_)
            | Error::Numerical(_) => ErrorKind::Numerical,
        }
    }
}
