use thiserror::Error;

/// Errors produced by the numerical operations.
#[derive(Debug, Error)]
pub enum Error {
    /// Adaptive quadrature could not reach the requested relative tolerance.
    #[error("quadrature did not converge: requested rel. tol {requested:e}, achieved {achieved:e}")]
    Quadrature { requested: f64, achieved: f64 },

    /// Bracket expansion for a monotone inverse ran out of representable range.
    #[error("inverse out of range: target {target:e} exceeds the representable mass")]
    RangeExceeded { target: f64 },

    /// An argument is outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A documented precondition of the operation is violated.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A parameter is outside the admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A grid container is malformed (occupancy range, boundary support, ...).
    #[error("invalid grid: {0}")]
    Grid(String),

    /// Iterative solver ran out of iterations. The residual history of the
    /// failed run is attached for diagnosis.
    #[error("solver did not converge after {iterations} iterations (last residual {residual:e})")]
    SolverNonConvergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// A file does not follow the MUGRID / CSV / JSON format it claims.
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: usage errors 2, numerical failures 3.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_) | Error::Format(_) | Error::Io(_) => 2,
            _ => 3,
        }
    }
}
