use thiserror::Error;

/// Errors raised by the numerical kernels and the drivers built on them.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("singular block {block}: {detail}")]
    SingularBlock { block: &'static str, detail: String },

    #[error("eigenvalue iteration did not converge on active submatrix rows {lo}..={hi} after {sweeps} sweeps")]
    Convergence { lo: usize, hi: usize, sweeps: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unsupported preconditioner kind for this operation: {0}")]
    UnsupportedKind(String),

    #[error("degenerate eigenvalue {0}: closed-form eigenvector undefined")]
    DegenerateEigenvalue(String),

    #[error("Eddington closure breakdown: nonpositive scalar flux {value} at x = {x}")]
    ClosureBreakdown { x: f64, value: f64 },

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("csv output failed: {0}")]
    Csv(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
