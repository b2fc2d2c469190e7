use thiserror::Error;

/// Errors raised by the estimation routines and the command-line surface.
#[derive(Debug, Error)]
pub enum Error {
    /// Caller supplied parameters or data outside an operation's domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A CSV cell could not be parsed. Rows and columns are 1-based.
    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    /// A kernel window leaves [0, 1] at a requested evaluation point.
    #[error("kernel window [{lo:.6}, {hi:.6}] around t = {t:.6} exits [0, 1]")]
    Boundary { t: f64, lo: f64, hi: f64 },

    /// Linear algebra breakdown, iteration limits, non-convergent quadrature.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// True for failures that originate in the numerics rather than the input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
