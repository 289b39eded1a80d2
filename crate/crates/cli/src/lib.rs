//! Command-line front end: strict JSON configuration, deterministic output
//! emission, and the `nsk1d` subcommand surface.
//!
//! The library half exists so integration tests can drive the exact code
//! the binary runs, in-process, via [`commands::cli_main`].

pub mod commands;
pub mod config;
pub mod emit;
pub mod error;

pub use commands::{cli_main, Cli};
pub use config::{parse_config, parse_config_str, RunConfig, Scenario};
pub use emit::{emit_run, emit_sweep, Manifest, RunSummary};
pub use error::{exit_code, CliError};
