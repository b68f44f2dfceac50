use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = SicaError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum SicaError {
    /// An input lies outside the domain of the operation (non-finite values,
    /// negative rates, non-positive step sizes, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A jump would drive S negative: 1 - J*I <= 0.
    #[error("jump overflow: 1 - J*I = {margin:e} <= 0 (J = {jump_size:e}, I = {infected:e}); the jump measure violates the hypothesis J <= mu/Lambda")]
    JumpOverflow {
        jump_size: f64,
        infected: f64,
        margin: f64,
    },

    #[error("jump measure violates J <= {cap:e}: offending marks {offending:?}")]
    Hypothesis { cap: f64, offending: Vec<(usize, f64)> },

    #[error("insufficient data: {usable} usable points, need at least {required}")]
    InsufficientData { usable: usize, required: usize },

    #[error("non-finite state at t = {time}: {detail}")]
    NonFinite { time: f64, detail: String },

    #[error("path {path_index} failed: {source}")]
    PathFailed {
        path_index: u64,
        #[source]
        source: Box<SicaError>,
    },

    #[error("invalid config at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl SicaError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        SicaError::Domain(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SicaError::Io {
            path: path.into(),
            source,
        }
    }
}
