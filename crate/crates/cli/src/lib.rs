//! Config-driven runner for the fluxlab experiments.
//!
//! Each experiment reads a TOML config, runs the matching numerical routine
//! from the core crate and writes versioned CSV tables plus a JSON summary
//! holding the same values. `report` turns those CSVs back into
//! convergence tables with log-log slopes.

pub mod config;
pub mod error;
pub mod report;
pub mod run;
pub mod table;

pub use config::{parse_config, ConfigIssue, ExperimentConfig, ExperimentKind};
pub use error::{CliError, Result};
pub use run::{run, Artifacts, RunOptions};

/// Read and parse a config file.
pub fn load_config(path: &std::path::Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    parse_config(&text).map_err(CliError::Config)
}
