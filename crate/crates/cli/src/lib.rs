//! Experiment orchestration for `olre-core`: the key-value run
//! configuration, a parallel trial runner, CSV outputs and SVG plots.
//!
//! The `olre` binary exposes three subcommands:
//!
//! * `run <config>` executes every (method, trial) pair and writes
//!   `trials.csv`, `aggregate.csv` and `resolved_config.txt`;
//! * `select <config>` runs the warm-up cross-validation alone and writes
//!   `selection.txt` and `cv_table.csv`;
//! * `plot <csv> <svg>` draws an aggregate CSV.

pub mod cli;
pub mod commands;
pub mod config;
pub mod experiment;
pub mod output;
pub mod plot;

pub use config::RunConfig;
pub use experiment::{run_experiment, RunOutcome, TrialFailure};
