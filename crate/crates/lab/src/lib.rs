//! Configuration, run manifests and the subcommands behind the `lab` binary.

pub mod commands;
pub mod config;
pub mod manifest;

pub use config::{parse_config, parse_config_str, ConfigError, LabConfig};
pub use manifest::RunManifest;
