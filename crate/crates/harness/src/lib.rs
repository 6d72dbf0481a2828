//! Experiment harness for the incentive-contract learner: TOML run
//! configs, per-episode metrics, versioned checkpoints, baseline and oracle
//! evaluation, contract export, plot data and an external evaluator client.

pub mod checkpoint;
pub mod config;
pub mod error;
pub mod evaluator;
pub mod export;
pub mod metrics;
pub mod plot;
pub mod runner;
pub mod stub;

pub use config::{load_config, RunConfig};
pub use error::{HarnessError, Result};
