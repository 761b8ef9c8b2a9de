//! Camera calibration geometry, training-label encoding, perceptual error
//! measures and horizon-based retrieval for single-image camera calibration.

pub mod camera;
pub mod codec;
pub mod crop;
pub mod dataset;
pub mod error;
pub mod gof;
pub mod perceptual;
pub mod retrieval;
pub mod sampling;
pub mod summary;
pub mod synthetic;

pub use error::{Error, Result};
