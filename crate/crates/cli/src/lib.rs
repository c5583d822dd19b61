//! Pipeline command-line tool: library surface.
//!
//! The binary in `main.rs` is a thin wrapper; all stage logic lives here so
//! integration and acceptance tests can drive it in-process.

pub mod config;
pub mod error;
pub mod ingest;
pub mod manifest;
pub mod plots;
pub mod stages;

pub use config::PipelineConfig;
pub use error::CliError;
pub use stages::{run_stage, Stage, StageContext};
