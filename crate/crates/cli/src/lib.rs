//! Scenario runner library: load a scenario file, execute its mode end to
//! end, and emit CSV metrics, image dumps, and summary reports.

pub mod report;
pub mod run;
pub mod scenario;

pub use report::{compare_runs, CompareError, MetricDelta, RunReport};
pub use run::{run_scenario, Overrides, RunError};
pub use scenario::{load_scenario, Mode, Scenario, ScenarioError};
