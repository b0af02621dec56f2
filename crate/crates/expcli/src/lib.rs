//! Declarative experiment runner: configs in, CSV results and a manifest
//! out.

pub mod compare;
pub mod config;
pub mod manifest;
pub mod run;

pub use compare::compare;
pub use config::{ExperimentConfig, Kind};
pub use manifest::Manifest;
pub use run::run;

use lref_core::Error;

/// Process exit status for an error: 2 for bad input, 3 for failures
/// while running.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Validation(_) | Error::Parse { .. } => 2,
        _ => 3,
    }
}
