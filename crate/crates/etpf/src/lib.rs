//! Configuration files, experiment presets, CSV output and the acceptance
//! suite around the `etpf-core` simulation library.

pub mod acceptance;
pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod presets;

pub use error::{CliError, Result};
pub use etpf_core as core;
