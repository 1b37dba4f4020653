//! Scenario-driven pipeline: simulate pings along a trajectory, localize each
//! epoch, fuse, and write results.

mod output;
mod scenario;
pub mod seeds;
mod sim;

pub use output::{write_outputs, EPOCH_COLUMNS};
pub use scenario::{
    load_scenario, parse_scenario, AnchorSpec, EkfConfig, FixSigmaMode, GeodeticSpec, Scenario, ScenarioAnchor,
    ScenarioError, ScenarioFile, WaterColumnSpec, Waypoint,
};
pub use sim::{run_simulation, AxisRmse, EpochInputs, EpochRecord, OriginSummary, RunError, RunSummary, Simulation};
