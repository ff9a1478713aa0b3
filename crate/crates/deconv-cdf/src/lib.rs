//! Experiment harness for `deconv-cdf-core`: configuration files, Monte Carlo
//! risk evaluation, rate experiments, CSV outputs and the command line.

pub mod config;
pub mod error;
pub mod io;
pub mod rate;
pub mod scenario;

pub use error::{HarnessError, Result};
