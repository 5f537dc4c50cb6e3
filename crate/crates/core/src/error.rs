use std::path::PathBuf;

/// Errors produced by the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("linear system is numerically singular (pivot {pivot} at row {row})")]
    Singular { row: usize, pivot: f64 },

    #[error("spectral radius estimate did not converge after {iterations} iterations (last relative change {change:e})")]
    NotConverged { iterations: usize, change: f64 },

    #[error("matrix has spectral radius {radius:e}; cannot rescale to {target}")]
    DegenerateSpectrum { radius: f64, target: f64 },

    #[error("analytic solution has a pole at x={x}, t={t} (denominator {denominator:e})")]
    Pole { x: f64, t: f64, denominator: f64 },

    #[error("field became non-finite at integration step {step}")]
    NonFinite { step: usize },

    #[error("empty series")]
    EmptySeries,

    #[error("model has no trained readout")]
    Untrained,

    #[error("parse error in {path:?} line {line}: {message}")]
    Parse {
        path: Option<PathBuf>,
        line: usize,
        message: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn parse(path: Option<&std::path::Path>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.map(|p| p.to_path_buf()),
            line,
            message: msg.into(),
        }
    }

    /// True for failures that come from numerics rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular { .. }
                | Error::NotConverged { .. }
                | Error::DegenerateSpectrum { .. }
                | Error::Pole { .. }
                | Error::NonFinite { .. }
        )
    }
}
