//! Scenario-driven front end for `geomech`.
//!
//! * [`scenario`]: the JSON scenario schema and its validation.
//! * [`build`]: construction of core objects from a scenario.
//! * [`run`]: execution of every scenario kind.
//! * [`output`]: CSV time series and the JSON summary.

pub mod build;
pub mod error;
pub mod output;
pub mod run;
pub mod scenario;

use std::path::Path;

pub use error::CliError;
pub use output::{Outcome, Summary, Table};
pub use scenario::{Kind, Overrides, Scenario};

/// Read, parse, validate and override a scenario file.
pub fn load(path: &Path, overrides: &Overrides) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
    let mut s = Scenario::from_json(&text)?;
    s.apply(overrides)?;
    Ok(s)
}

/// Run a scenario and write its outputs when it names an output directory.
pub fn execute(s: &Scenario) -> Result<Outcome, CliError> {
    let outcome = run::run(s)?;
    if let Some(dir) = &s.output {
        outcome.write(dir)?;
    }
    Ok(outcome)
}
