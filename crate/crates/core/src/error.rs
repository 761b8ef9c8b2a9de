use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the calibration toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The horizon is (numerically) vertical and has no midpoint/offset form.
    #[error("degenerate horizon line: {0}")]
    DegenerateLine(String),

    #[error("point lies at or behind the camera plane")]
    BehindCamera,

    /// The back-projected ray never reaches the ground plane in front of the camera.
    #[error("pixel ({u:.3}, {v:.3}) does not intersect the ground plane")]
    NoGroundIntersection { u: f64, v: f64 },

    #[error("{path}:{line}: {message}")]
    Schema {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("rejection sampling gave up after {0} attempts")]
    SamplingExhausted(usize),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
