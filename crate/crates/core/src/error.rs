use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid discretization: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("fields live on incompatible grids")]
    GridMismatch,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("direct quadrature refused: {nodes} nodes exceeds limit {limit}")]
    DirectTooLarge { nodes: usize, limit: usize },

    #[error("numerical blow-up at step {step} (t = {time}): {reason}")]
    BlowUp {
        step: usize,
        time: f64,
        reason: String,
    },

    #[error("sweep aborted at nu = {nu}: {source}")]
    SweepBlowUp {
        nu: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("trajectories cannot be compared: {0}")]
    TrajectoryMismatch(String),

    #[error("regression needs at least two distinct abscissae, got {0}")]
    TooFewPoints(usize),

    #[error("{0}")]
    Config(#[from] ConfigError),

    #[error("snapshot {path}: {reason}")]
    Snapshot { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures caused by the numerics rather than the input.
    pub fn is_blow_up(&self) -> bool {
        matches!(self, Error::BlowUp { .. } | Error::SweepBlowUp { .. })
    }
}

/// Every problem found while reading a configuration file, reported together.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("configuration error{}:\n  {}", if .problems.len() > 1 { "s" } else { "" }, .problems.join("\n  "))]
pub struct ConfigError {
    pub problems: Vec<String>,
}

impl ConfigError {
    pub fn single(msg: impl Into<String>) -> Self {
        Self {
            problems: vec![msg.into()],
        }
    }
}
