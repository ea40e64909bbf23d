//! Config handling, scenarios and artifacts for the `sce` binary.

pub mod config;
pub mod error;
pub mod output;
pub mod scenarios;

pub use config::{Scenario, ScenarioConfig};
pub use error::{CliError, CliResult};
pub use output::RunReport;
pub use scenarios::run;

use std::path::Path;

pub fn load(path: &Path, overrides: &[String]) -> CliResult<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    ScenarioConfig::from_str(&text, overrides)
}
