//! Batch front end: configuration parsing, sensitivity-grid construction,
//! run orchestration, and report writing.

pub mod config;
pub mod error;
pub mod grid;
pub mod inputs;
pub mod report;
pub mod run;

pub use error::{CliError, CliResult};
