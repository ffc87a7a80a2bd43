//! Scenario runner and invariant check suite for `susy_fgkls`.

pub mod check;
pub mod config;
pub mod report;
pub mod scenario;

pub use check::run_check_suite;
pub use config::{parse_config, ConfigErrors, ScenarioConfig};
pub use report::{Entry, RunReport};
pub use scenario::{run_scenario, ScenarioOutcome, Trajectory};
