//! File formats, configuration, threaded execution and the training pipeline
//! behind the `taskdict` command-line tool. The algorithms live in
//! [`taskdict_core`].

pub mod config;
pub mod error;
pub mod formats;
pub mod manifest;
pub mod model_file;
pub mod parallel;
pub mod pgm;
pub mod pipeline;

pub use error::{CliError, Result};
pub use taskdict_core;
