use serde::{Deserialize, Serialize};

use super::initial_data::InitialData;
use crate::error::{Error, Result};
use crate::model::Params;

/// Full description of one simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub params: Params,
    /// Outer radius of the domain `[0, R_max]`.
    pub r_max: f64,
    /// Number of grid nodes, including `r = 0` and `r = R_max`.
    pub nodes: usize,
    pub initial: InitialData,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    /// Optional fixed upper bound on the time step.
    #[serde(default)]
    pub dt: Option<f64>,
    /// Amplitude-controlled step `dt <= α A^{-(p-1)/2}`, with `A` the largest
    /// amplitude on live nodes. `None` disables the control.
    #[serde(default = "default_amplitude_step")]
    pub amplitude_step: Option<f64>,
    #[serde(default)]
    pub stop: StopRules,
    #[serde(default)]
    pub snapshots: SnapshotRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopRules {
    /// Amplitude ceiling `M`: a node reaching it is declared blown up.
    #[serde(default = "default_ceiling")]
    pub ceiling: f64,
    #[serde(default = "default_max_time")]
    pub max_time: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: u64,
    /// Dense per-node amplitude traces start once `|u| > trace_fraction · M`.
    #[serde(default = "default_trace_fraction")]
    pub trace_fraction: f64,
}

/// Snapshot cadence `Δ = max(min(Δ_base, τ/divisions), h·floor_cells)` with
/// `τ = (κ₀/A)^{(p-1)/2}` the ODE time-to-blow-up at the largest amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotRule {
    #[serde(default = "default_base_interval")]
    pub base_interval: f64,
    #[serde(default = "default_divisions")]
    pub divisions: f64,
    #[serde(default = "default_floor_cells")]
    pub floor_cells: f64,
}

fn default_cfl() -> f64 {
    0.45
}
fn default_amplitude_step() -> Option<f64> {
    Some(0.05)
}
fn default_ceiling() -> f64 {
    1e6
}
fn default_max_time() -> f64 {
    10.0
}
fn default_max_steps() -> u64 {
    5_000_000
}
fn default_trace_fraction() -> f64 {
    0.1
}
fn default_base_interval() -> f64 {
    0.01
}
fn default_divisions() -> f64 {
    40.0
}
fn default_floor_cells() -> f64 {
    0.25
}

impl Default for StopRules {
    fn default() -> Self {
        Self {
            ceiling: default_ceiling(),
            max_time: default_max_time(),
            max_steps: default_max_steps(),
            trace_fraction: default_trace_fraction(),
        }
    }
}

impl Default for SnapshotRule {
    fn default() -> Self {
        Self {
            base_interval: default_base_interval(),
            divisions: default_divisions(),
            floor_cells: default_floor_cells(),
        }
    }
}

impl Scenario {
    /// Scenario with default numerics.
    pub fn new(params: Params, r_max: f64, nodes: usize, initial: InitialData) -> Self {
        Self {
            params,
            r_max,
            nodes,
            initial,
            cfl: default_cfl(),
            dt: None,
            amplitude_step: default_amplitude_step(),
            stop: StopRules::default(),
            snapshots: SnapshotRule::default(),
        }
    }

    pub fn spacing(&self) -> f64 {
        self.r_max / (self.nodes - 1) as f64
    }

    pub fn radii(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.nodes).map(|i| i as f64 * h).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScenario(m));
        if !(self.r_max > 0.0) || !self.r_max.is_finite() {
            return bad(format!("R_max must be > 0, got {}", self.r_max));
        }
        if self.nodes < 3 {
            return bad(format!("need at least 3 grid nodes, got {}", self.nodes));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return bad(format!("CFL factor must lie in (0, 1], got {}", self.cfl));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0) {
                return bad(format!("fixed time step must be > 0, got {dt}"));
            }
            let ratio = dt / self.spacing();
            if ratio > self.cfl * (1.0 + 1e-12) {
                return Err(Error::Cfl { ratio, limit: self.cfl });
            }
        }
        if let Some(alpha) = self.amplitude_step {
            if !(alpha > 0.0) {
                return bad(format!("amplitude step factor must be > 0, got {alpha}"));
            }
        }
        let s = &self.stop;
        if !(s.ceiling > 0.0) || !s.ceiling.is_finite() {
            return bad(format!("amplitude ceiling must be finite and > 0, got {}", s.ceiling));
        }
        if !(s.max_time > 0.0) {
            return bad(format!("max_time must be > 0, got {}", s.max_time));
        }
        if !(s.trace_fraction > 0.0 && s.trace_fraction < 1.0) {
            return bad(format!("trace fraction must lie in (0, 1), got {}", s.trace_fraction));
        }
        let c = &self.snapshots;
        if !(c.base_interval > 0.0 && c.divisions > 0.0 && c.floor_cells > 0.0) {
            return bad("snapshot cadence parameters must be > 0".into());
        }
        self.initial.validate()
    }
}
