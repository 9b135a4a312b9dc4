use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{argth, linear_fit};
use crate::similarity::LyapunovTrace;
use crate::solitons::SolitonFit;
use crate::solver::BlowupCurve;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CriterionStatus {
    Pass,
    /// Evidence does not decide, e.g. inside the margin or too few samples.
    Undetermined,
    /// The criterion presumes blow-up and the trace carries none.
    NotApplicable,
}

/// Energy criterion: `E(w(s)) < 2E(κ₀) - C₃e^{-s}` at some late `s` rules
/// out a second soliton.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyCriterion {
    pub status: CriterionStatus,
    pub c3: f64,
    /// `max_s (2E(κ₀) - C₃e^{-s} - E(s))` over the late rows.
    pub best_margin: f64,
    pub s_last: f64,
    pub e_last: f64,
    /// `E(s_last) ≥ k E(κ₀) - C₃e^{-s_last}` for the fitted `k`, when given.
    pub lower_bound_holds: Option<bool>,
}

impl EnergyCriterion {
    pub fn passes(&self) -> bool {
        self.status == CriterionStatus::Pass
    }
}

const MIN_TRACE_ROWS: usize = 3;

/// Checks the energy criterion on the last third of the trace.
pub fn energy_criterion(trace: &LyapunovTrace, ek0: f64, c3: f64, k: Option<usize>) -> EnergyCriterion {
    let rows = &trace.rows;
    let (s_last, e_last) = rows.last().map_or((f64::NAN, f64::NAN), |r| (r.s, r.e));
    let mut out = EnergyCriterion {
        status: CriterionStatus::Undetermined,
        c3,
        best_margin: f64::NEG_INFINITY,
        s_last,
        e_last,
        lower_bound_holds: None,
    };
    if rows.len() < MIN_TRACE_ROWS {
        return out;
    }
    if rows.iter().all(|r| r.e.abs() <= 1e-12 && r.f.abs() <= 1e-12) {
        out.status = CriterionStatus::NotApplicable;
        return out;
    }
    let late = &rows[rows.len() - rows.len().div_ceil(3)..];
    out.best_margin = late.iter().map(|r| 2.0 * ek0 - c3 * (-r.s).exp() - r.e).fold(f64::NEG_INFINITY, f64::max);
    if out.best_margin > 0.0 {
        out.status = CriterionStatus::Pass;
    }
    out.lower_bound_holds = k.map(|k| e_last >= k as f64 * ek0 - c3 * (-s_last).exp());
    out
}

/// Cone condition `T(r) ≥ T(r₀) - δ|r - r₀|` near `r₀`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConeTest {
    pub r0: f64,
    pub window: f64,
    /// Smallest `δ` of the test grid satisfying the condition.
    pub delta: Option<f64>,
    pub passes: bool,
    /// `max (T(r₀) - T(r))/|r - r₀|` over the window.
    pub required: f64,
    /// `required` over nested windows `window/2^j`, as `(window, required)`.
    pub nested: Vec<(f64, f64)>,
    pub checked: usize,
    /// Samples exist on one side of `r₀` only.
    pub one_sided: bool,
}

/// Test grid `0.05, 0.10, …, 0.95`.
pub const CONE_DELTAS: [f64; 19] =
    [0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95];

/// Smallest `δ` on [`CONE_DELTAS`] with `T(r) ≥ T(r₀) - δ|r - r₀|` for every
/// sampled `0 < |r - r₀| ≤ window`; fails when even `0.95` is violated.
pub fn cone_test(curve: &BlowupCurve, r0: f64, window: f64) -> Result<ConeTest> {
    let k0 = curve
        .nearest(r0)
        .filter(|&k| (curve.r[k] - r0).abs() <= 0.5 * curve.h + 1e-12)
        .ok_or_else(|| Error::OutOfRange(format!("no blow-up time sampled at r0 = {r0}")))?;
    let (rc, tc) = (curve.r[k0], curve.t[k0]);
    let required_in = |w: f64| {
        let mut req = f64::NEG_INFINITY;
        let mut n = 0;
        let (mut left, mut right) = (false, false);
        for k in 0..curve.len() {
            let dr = curve.r[k] - rc;
            if k == k0 || dr.abs() > w + 1e-12 {
                continue;
            }
            left |= dr < 0.0;
            right |= dr > 0.0;
            req = req.max((tc - curve.t[k]) / dr.abs());
            n += 1;
        }
        (req, n, left && right)
    };
    let (required, checked, both) = required_in(window);
    if checked == 0 {
        return Err(Error::InsufficientData(format!("no curve samples within {window} of r0 = {r0}")));
    }
    let nested = (1..=3)
        .map(|j| window / f64::from(1u32 << j))
        .map(|w| (w, required_in(w)))
        .filter(|(_, (_, n, _))| *n > 0)
        .map(|(w, (req, _, _))| (w, req))
        .collect();
    let delta = CONE_DELTAS.iter().copied().find(|&d| d >= required - 1e-12);
    Ok(ConeTest { r0, window, delta, passes: delta.is_some(), required, nested, checked, one_sided: !both })
}

/// `|argth d_fit - argth T'(r₀)|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeMatch {
    pub slope: f64,
    pub d_fit: f64,
    /// `None` when `|T'(r₀)| ≥ 1`.
    pub mismatch: Option<f64>,
    pub fit_converged: bool,
}

pub fn slope_match(fit: &SolitonFit, curve: &BlowupCurve, r0: f64) -> Result<SlopeMatch> {
    let k = curve
        .nearest(r0)
        .filter(|&k| (curve.r[k] - r0).abs() <= 0.5 * curve.h + 1e-12)
        .ok_or_else(|| Error::OutOfRange(format!("no slope sampled at r0 = {r0}")))?;
    let slope = curve.slope[k];
    let mismatch = (slope.abs() < 1.0).then(|| (argth(fit.d) - argth(slope)).abs());
    Ok(SlopeMatch { slope, d_fit: fit.d, mismatch, fit_converged: fit.converged })
}

/// Exponential decay rate of the single-soliton residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRate {
    /// `μ̂` in `residual ≈ C e^{-μ̂ s}`.
    pub mu: f64,
    pub r_squared: f64,
    pub samples: usize,
    /// `μ̂ > 0`.
    pub decaying: bool,
    /// Decaying with `R² ≥` the threshold.
    pub exponential: bool,
}

pub const MIN_RATE_SAMPLES: usize = 6;

/// Regresses `log residual` on `s` over the converged fits with positive residual.
pub fn convergence_rate(fits: &[(f64, SolitonFit)], r2_threshold: f64) -> Result<ConvergenceRate> {
    let (s, log_r): (Vec<f64>, Vec<f64>) =
        fits.iter().filter(|(_, f)| f.converged && f.residual > 0.0).map(|(s, f)| (*s, f.residual.ln())).unzip();
    if s.len() < MIN_RATE_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "decay rate needs {MIN_RATE_SAMPLES} converged fits, got {}",
            s.len()
        )));
    }
    let fit = linear_fit(&s, &log_r).ok_or_else(|| Error::InsufficientData("similarity times do not vary".into()))?;
    let mu = -fit.slope;
    let decaying = mu > 1e-12;
    Ok(ConvergenceRate {
        mu,
        r_squared: fit.r_squared,
        samples: s.len(),
        decaying,
        exponential: decaying && fit.r_squared >= r2_threshold,
    })
}
