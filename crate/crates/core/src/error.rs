use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("out of range: {0}")]
    Range(String),

    /// Expanding-interval eigenvalue did not settle; carries the (R, λ_R) table.
    #[error("no convergence after {} radii: {message}", table.len())]
    Convergence { message: String, table: Vec<(f64, f64)> },

    /// Newton or linear solve failure with the residual history.
    #[error("solver failure: {message}")]
    Solver { message: String, residuals: Vec<f64> },

    #[error("discretization failure: {0}")]
    Discretization(String),

    #[error("scheme violation: {0}")]
    Scheme(String),

    #[error("domain too small: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable tag used in error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Argument(_) => "argument",
            Error::Range(_) => "range",
            Error::Convergence { .. } => "convergence",
            Error::Solver { .. } => "solver",
            Error::Discretization(_) => "discretization",
            Error::Scheme(_) => "scheme",
            Error::Domain(_) => "domain",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}
