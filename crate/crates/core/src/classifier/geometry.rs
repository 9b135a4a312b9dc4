use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Params;
use crate::numeric::linear_fit;
use crate::solver::{BlowupCurve, SolutionHistory};

pub const MIN_CORNER_SAMPLES: usize = 8;
const SLOPE_REACH: f64 = 4.5;

/// Fit of `log g = log C - β log|log|r - r₀||` on one side of `r₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentFit {
    pub beta: f64,
    pub c: f64,
    pub r_squared: f64,
    pub beta_stderr: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CornerSide {
    /// `-1` left of `r₀`, `+1` right.
    pub side: f64,
    /// From `g = 1 - |T'(r)|`, i.e. `|T'(r) + sign(r - r₀)|` for a corner.
    pub derivative: Option<ExponentFit>,
    /// From the integrated form `g = (T(r) - T(r₀) + |r - r₀|)/|r - r₀|`.
    pub integrated: Option<ExponentFit>,
    /// Samples within the window.
    pub samples: usize,
    /// `g` vanishes (straight cone, `C → 0`).
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CornerFit {
    pub r0: f64,
    pub window: f64,
    pub k: usize,
    /// `(k - 1)(p - 1)/2`.
    pub predicted_beta: f64,
    pub left: CornerSide,
    pub right: CornerSide,
}

impl CornerFit {
    /// Mean integrated-form exponent over the non-degenerate sides.
    pub fn beta(&self) -> Option<f64> {
        let b: Vec<f64> = [&self.left, &self.right]
            .iter()
            .filter(|s| !s.degenerate)
            .filter_map(|s| s.integrated.map(|f| f.beta))
            .collect();
        (!b.is_empty()).then(|| b.iter().sum::<f64>() / b.len() as f64)
    }
}

fn exponent_fit(x: &[f64], g: &[f64]) -> Option<ExponentFit> {
    let (lx, lg): (Vec<f64>, Vec<f64>) =
        x.iter().zip(g).filter(|(_, &g)| g > 0.0).map(|(&x, &g)| (x.ln().abs().ln(), g.ln())).unzip();
    if lx.len() < MIN_CORNER_SAMPLES {
        return None;
    }
    let fit = linear_fit(&lx, &lg)?;
    Some(ExponentFit {
        beta: -fit.slope,
        c: fit.intercept.exp(),
        r_squared: fit.r_squared,
        beta_stderr: fit.slope_stderr,
        samples: lx.len(),
    })
}

/// Corner exponent at `r₀` from samples with `0 < |r - r₀| ≤ window < 1`.
///
/// Fits `1 + sign(r - r₀) T'(r) ≈ C/|log|r - r₀||^β` and its integrated form
/// `T(r) - T(r₀) + |r - r₀| ≈ C|r - r₀|/|log|r - r₀||^β` on each side.
pub fn corner_fit(curve: &BlowupCurve, r0: f64, k: usize, window: f64, params: &Params) -> Result<CornerFit> {
    if !(window > 0.0 && window < 1.0) {
        return Err(Error::Domain(format!("corner window must lie in (0, 1), got {window}")));
    }
    let k0 = curve
        .nearest(r0)
        .filter(|&k| (curve.r[k] - r0).abs() <= 0.5 * curve.h + 1e-12)
        .ok_or_else(|| Error::OutOfRange(format!("no blow-up time sampled at r0 = {r0}")))?;
    let (rc, tc) = (curve.r[k0], curve.t[k0]);
    let side = |sign: f64| {
        let idx: Vec<usize> = (0..curve.len())
            .filter(|&k| {
                let dr = (curve.r[k] - rc) * sign;
                dr > 1e-12 && dr <= window + 1e-12
            })
            .collect();
        let x: Vec<f64> = idx.iter().map(|&k| (curve.r[k] - rc).abs()).collect();
        let gi: Vec<f64> = idx.iter().zip(&x).map(|(&k, &x)| (curve.t[k] - tc + x) / x).collect();
        // the smoothed slope straddles the corner within SLOPE_REACH nodes
        let (xd, gd): (Vec<f64>, Vec<f64>) = idx
            .iter()
            .zip(&x)
            .filter(|(_, &x)| x > SLOPE_REACH * curve.h)
            .map(|(&k, &x)| (x, 1.0 + sign * curve.slope[k]))
            .unzip();
        CornerSide {
            side: sign,
            derivative: exponent_fit(&xd, &gd),
            integrated: exponent_fit(&x, &gi),
            samples: idx.len(),
            degenerate: gi.iter().all(|g| g.abs() <= 1e-9),
        }
    };
    let (left, right) = (side(-1.0), side(1.0));
    if left.samples < MIN_CORNER_SAMPLES || right.samples < MIN_CORNER_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "corner fit needs {MIN_CORNER_SAMPLES} samples per side within {window}, got {} and {}",
            left.samples, right.samples
        )));
    }
    Ok(CornerFit { r0, window, k, predicted_beta: (k as f64 - 1.0) * (params.p() - 1.0) / 2.0, left, right })
}

/// Blow-up speed in the backward light cone of `(r₀, T(r₀))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeedTrace {
    pub r0: f64,
    pub blowup_time: f64,
    /// `(T - t, sup_{|r - r₀| < T - t} |u(r, t)|)`.
    pub samples: Vec<(f64, f64)>,
    /// Slope of `log(sup · (T - t)^{2/(p-1)})` against `log|log(T - t)|`.
    pub slope: f64,
    pub r_squared: f64,
    /// `(k - 1)/2` when `k` is given.
    pub predicted: Option<f64>,
}

pub const MIN_SPEED_SAMPLES: usize = 6;

/// Regresses the rescaled cone supremum over the snapshots with
/// `4h ≤ T - t ≤ e^{-1}` whose cone stays on the grid.
pub fn speed_trace(history: &SolutionHistory, r0: f64, blowup_time: f64, k: Option<usize>) -> Result<SpeedTrace> {
    let a = history.params().rate_exponent();
    let h = history.spacing();
    let radii = history.radii();
    let mut samples = Vec::new();
    for snap in history.snapshots() {
        let tau = blowup_time - snap.t;
        if !(tau >= 4.0 * h && tau <= (-1.0f64).exp()) {
            continue;
        }
        if r0 + tau > history.r_max() {
            continue;
        }
        let sup = radii
            .iter()
            .zip(&snap.u)
            .filter(|(&r, u)| (r - r0).abs() < tau && u.is_finite())
            .map(|(_, u)| u.abs())
            .fold(0.0, f64::max);
        if sup > 0.0 {
            samples.push((tau, sup));
        }
    }
    if samples.len() < MIN_SPEED_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "speed trace needs {MIN_SPEED_SAMPLES} snapshots inside the cone at r0 = {r0}, got {}",
            samples.len()
        )));
    }
    let x: Vec<f64> = samples.iter().map(|(tau, _)| tau.ln().abs().ln()).collect();
    let y: Vec<f64> = samples.iter().map(|(tau, sup)| (sup * tau.powf(a)).ln()).collect();
    let fit = linear_fit(&x, &y).ok_or_else(|| Error::InsufficientData("degenerate speed samples".into()))?;
    Ok(SpeedTrace {
        r0,
        blowup_time,
        samples,
        slope: fit.slope,
        r_squared: fit.r_squared,
        predicted: k.map(|k| (k as f64 - 1.0) / 2.0),
    })
}
