use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("config parse error: {0}")]
    Parse(String),

    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error("degenerate geometry: {0}")]
    Geometry(String),

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("stationary solve did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("fixed-point iteration did not converge in {iterations} iterations (last change {last_change:.3e})")]
    FixedPoint {
        iterations: usize,
        last_change: f64,
        trace: Vec<f64>,
    },

    #[error("linear algebra failure: {0}")]
    Singular(String),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn dimension(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }
}
