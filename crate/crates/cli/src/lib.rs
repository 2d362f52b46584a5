//! Scenario files in, CSV reports out.

pub mod commands;
pub mod report;
pub mod scenario_file;

pub use commands::{run, Command, Outcome, RunFlags};
pub use scenario_file::{parse_scenario, ScenarioError};
