//! Config-driven experiment runner: builds fixtures from a TOML document,
//! runs the weight, solver and inequality checks, and writes CSV artifacts.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiment;

pub use config::{load_config, parse_config, ExperimentConfig, Subcommand};
pub use error::CliError;
pub use experiment::{output_dir, run_experiment, Check, RunArtifact, RunOptions, Summary};
