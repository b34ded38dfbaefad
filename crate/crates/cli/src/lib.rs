//! Configuration, presets and output writers behind the `nopo` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;
pub mod presets;
pub mod runner;

use nopo_core::NopoError;

pub use config::{load, parse, ConfigError, ExperimentConfig};
pub use runner::{run, RunSummary};

/// Process exit code for an error chain: 2 for bad input, 3 for an exhausted fault budget, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<NopoError>() {
        Some(NopoError::Parameter { .. } | NopoError::Domain { .. } | NopoError::Scaling) => 2,
        Some(NopoError::FaultBudget { .. }) => 3,
        _ => 1,
    }
}
