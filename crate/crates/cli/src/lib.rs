//! Command-line front end for the `weakprobe` engines: TOML-configured
//! sweeps, canned figure recipes and a golden-value spot check.

pub mod config;
pub mod golden;
pub mod recipes;
pub mod sweep;
