//! Monte Carlo harness, file formats and command line for `amfshrink-core`.

pub mod cli;
pub mod compare;
pub mod config;
pub mod converge;
pub mod error;
pub mod experiment;
pub mod matrix_io;
mod report;

pub use error::{HarnessError, Result};
