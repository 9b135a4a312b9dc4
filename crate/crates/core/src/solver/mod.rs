//! Radial finite-difference solver with blow-up detection and reconstruction
//! of the blow-up curve.

mod curve;
mod history;
mod initial_data;
mod scenario;
mod stepper;

pub use curve::{
    blowup_curve, estimate_blowup_time, BlowupCurve, EstimateSource, LightConeReport, LipschitzReport, TimeEstimate,
};
pub use history::{Death, Snapshot, SnapshotFormat, SolutionHistory, StopReason};
pub use initial_data::{bump_profile, smoothstep, InitialData, GENERATOR_NAMES};
pub use scenario::{Scenario, SnapshotRule, StopRules};
pub use stepper::{init_scenario, run, DeathCause, FieldState};

/// Convenience: initialise and run a scenario.
pub fn simulate(scenario: &Scenario) -> crate::Result<SolutionHistory> {
    run(init_scenario(scenario)?, scenario)
}
