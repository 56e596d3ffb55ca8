//! Command-line front end: argument parsing, run manifests, report
//! assembly and rendering.

pub mod commands;
pub mod config;
pub mod manifest;
pub mod render;
pub mod report;

pub use commands::{cmd_build, cmd_inspect, cmd_report, emit, load_eval, run, Loaded, RunOutput};
pub use config::{Cli, RunConfig};
