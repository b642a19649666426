//! Experiment orchestration: configs, run records, the five CLI verbs, and
//! hyperparameter sweeps with per-cell caching.

pub mod cli;
pub mod commands;
pub mod config;
pub mod record;

pub use commands::{
    cmd_eval, cmd_gen_data, cmd_report, cmd_sweep, cmd_train, load_solver, train_solver,
    CliOptions, HarnessError, SweepOutcome, TrainOutcome,
};
pub use config::{Config, ConfigError};
pub use record::{content_hash, RunRecord, RunStatus};
