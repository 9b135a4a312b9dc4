//! Per-point verdicts (characteristic or not) and the geometric laws of the
//! blow-up curve.

mod criteria;
mod geometry;

pub use criteria::{
    cone_test, convergence_rate, energy_criterion, slope_match, ConeTest, ConvergenceRate, CriterionStatus,
    EnergyCriterion, SlopeMatch, CONE_DELTAS, MIN_RATE_SAMPLES,
};
pub use geometry::{
    corner_fit, speed_trace, CornerFit, CornerSide, ExponentFit, SpeedTrace, MIN_CORNER_SAMPLES, MIN_SPEED_SAMPLES,
};

use serde::{Deserialize, Serialize};

use crate::solver::SolutionHistory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    NonCharacteristic,
    CharacteristicCandidate,
    Undetermined,
}

/// Thresholds of the aggregation rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierSettings {
    /// Largest `|argth d_fit - argth T'(r₀)|` counted as a match.
    pub slope_tolerance: f64,
    /// `R²` needed to call residual decay exponential.
    pub r2_threshold: f64,
    /// `C₃ = c3_factor ×` boundedness supremum.
    pub c3_factor: f64,
    /// Half-width of the cone-test window.
    pub cone_window: f64,
}

impl Default for ClassifierSettings {
    fn default() -> Self {
        Self { slope_tolerance: 0.05, r2_threshold: 0.9, c3_factor: 10.0, cone_window: 0.25 }
    }
}

/// Everything measured at one point; absent components did not run or failed.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Evidence {
    /// `u` keeps one sign on the sampled backward cone.
    pub sign_constant: Option<bool>,
    /// The point sits on the axis, where the theory is silent.
    pub on_axis: bool,
    pub energy: Option<EnergyCriterion>,
    pub cone: Option<ConeTest>,
    pub slope: Option<SlopeMatch>,
    /// Selected number of solitons.
    pub k: Option<usize>,
    pub rate: Option<ConvergenceRate>,
    pub corner: Option<CornerFit>,
    pub speed: Option<SpeedTrace>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointClassification {
    pub r0: f64,
    pub verdict: Verdict,
    pub k: Option<usize>,
    /// Which rule produced the verdict.
    pub reason: String,
    /// Passing independent tests among energy, cone and slope.
    pub passing_tests: usize,
    pub evidence: Evidence,
}

/// Deterministic aggregation of the evidence at `r0`.
///
/// Axis points are undetermined. Sign constancy on the backward cone forces
/// a non-characteristic verdict. Otherwise the point is non-characteristic
/// when two of the energy criterion, the cone test and the slope match pass,
/// and a characteristic candidate when the cone test fails with `k ≥ 2`.
pub fn classify(r0: f64, evidence: Evidence, settings: &ClassifierSettings) -> PointClassification {
    let energy = evidence.energy.as_ref().is_some_and(|e| e.passes());
    let cone = evidence.cone.as_ref().map(|c| c.passes);
    let slope = evidence.slope.as_ref().and_then(|s| s.mismatch).is_some_and(|m| m <= settings.slope_tolerance);
    let passing_tests = usize::from(energy) + usize::from(cone == Some(true)) + usize::from(slope);
    let (verdict, reason) = if evidence.on_axis {
        (Verdict::Undetermined, "axis point")
    } else if evidence.sign_constant == Some(true) {
        (Verdict::NonCharacteristic, "constant sign on the backward cone")
    } else if passing_tests >= 2 {
        (Verdict::NonCharacteristic, "two independent tests pass")
    } else if cone == Some(false) && evidence.k.is_some_and(|k| k >= 2) {
        (Verdict::CharacteristicCandidate, "cone test fails with k >= 2")
    } else {
        (Verdict::Undetermined, "insufficient evidence")
    };
    PointClassification { r0, verdict, k: evidence.k, reason: reason.into(), passing_tests, evidence }
}

/// Whether `u` keeps one sign on every recorded node of the backward cone
/// `|r - r₀| ≤ T - t`; `None` when the cone holds no samples.
pub fn sign_constant_in_cone(history: &SolutionHistory, r0: f64, blowup_time: f64) -> Option<bool> {
    let (mut pos, mut neg, mut seen) = (false, false, false);
    for snap in history.snapshots() {
        let tau = blowup_time - snap.t;
        if tau <= 0.0 {
            continue;
        }
        for (&r, &u) in history.radii().iter().zip(&snap.u) {
            if (r - r0).abs() <= tau && u.is_finite() {
                seen = true;
                pos |= u > 0.0;
                neg |= u < 0.0;
            }
        }
    }
    seen.then_some(!(pos && neg))
}
