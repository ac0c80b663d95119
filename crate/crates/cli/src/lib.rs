//! Batch runner for the `nikodym` experiment presets.

pub mod config;
pub mod presets;
pub mod runner;

pub use config::{resolve, ConfigError, Execution, LoadedConfig, Overrides, RunConfig};
pub use presets::{list_presets, Preset, PRESETS};
pub use runner::{run, RunError, RunOutcome};
