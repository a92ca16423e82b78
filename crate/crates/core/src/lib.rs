//! Calibration transfer between spectrometers with graph-regularized PLS.

pub mod baselines;
pub mod cli;
pub mod dataio;
pub mod error;
pub mod experiment;
pub mod gctpls;
pub mod graphreg;
pub mod numcore;
pub mod persist;
pub mod sampling;

pub use error::{Error, Result};
