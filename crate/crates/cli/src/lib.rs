//! Library surface of the experiment runner: configuration parsing, check
//! execution, report assembly, and the built-in presets. The `irfs` binary
//! is a thin argument-parsing layer over [`runner::run_experiment`].

pub mod checks;
pub mod config;
pub mod error;
pub mod presets;
pub mod report;
pub mod runner;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
pub use report::ReportDocument;
