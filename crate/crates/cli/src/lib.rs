//! Command-line runner for generative data-augmentation experiments:
//! config parsing, the `run`/`baseline`/`synth`/`plot` commands, the MNIST
//! fetcher and the SVG plotter.

pub mod config;
pub mod error;
pub mod experiment;
pub mod fetch;
pub mod plot;
pub mod report;

pub use error::{CliError, CliResult};
