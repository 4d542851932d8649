use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("mesh mismatch: stencil built for h = {stencil_h}, field has h = {field_h}")]
    MeshMismatch { stencil_h: f64, field_h: f64 },

    #[error("non-finite value produced at cell {index}")]
    NonFiniteValue { index: usize },

    /// An iterate contained NaN/Inf; the explicit scheme blew up.
    #[error("non-finite state after step {step} ({elapsed_s:.3} s of stepping)")]
    NonFiniteState { step: usize, elapsed_s: f64 },

    /// `max |u|` outgrew the configured multiple of its initial value.
    #[error("diverged at step {step}: max |u| = {max_abs:e} ({elapsed_s:.3} s of stepping)")]
    Diverged {
        step: usize,
        max_abs: f64,
        elapsed_s: f64,
    },

    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    /// True for the errors that signal an unstable run rather than bad input.
    pub fn is_blow_up(&self) -> bool {
        matches!(self, Error::NonFiniteState { .. } | Error::Diverged { .. })
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
