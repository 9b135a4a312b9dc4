use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::to_similarity_frame;
use crate::error::{Error, Result};
use crate::model::functionals::{boundedness_integral, corrected_energy, dissipation, energy, lyapunov_from_f};
use crate::model::YGrid;
use crate::solver::{BlowupCurve, SolutionHistory};

/// Relative tolerance of the `H` monotonicity verdict, applied to `max(1, |H(s₀)|)`.
pub const H_TOLERANCE: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovRow {
    pub s: f64,
    pub e: f64,
    pub f: f64,
    pub h: f64,
    pub dfds: f64,
    pub dissipation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityReport {
    /// Smallest `γ ≥ 0` with `F' ≤ γ e^{-s} F - (2/(p-1)) ∫ w_s² ρ/(1-y²)` on
    /// every row, or `None` when no `γ` works.
    pub gamma_fit: Option<f64>,
    pub gamma_used: f64,
    /// Rows violating the differential inequality with `gamma_used`.
    pub inequality_violations: usize,
    /// Largest increase `H(s_l) - H(s_k)` over `k < l`.
    pub max_rise: f64,
    pub tolerance: f64,
    pub non_increasing: bool,
    /// Consecutive rises of `H` beyond tolerance in the first and second
    /// halves of the trace.
    pub early_rises: usize,
    pub late_rises: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LyapunovTrace {
    pub r0: f64,
    pub blowup_time: f64,
    pub rows: Vec<LyapunovRow>,
    pub report: MonotonicityReport,
}

impl LyapunovTrace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&LyapunovRow> {
        self.rows.last()
    }

    /// CSV with `#` comments and the columns `s,E,F,H,dFds,dissipation`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "# lyapunov trace at r0 = {}, T(r0) = {}", self.r0, self.blowup_time)?;
        writeln!(out, "# gamma = {}", self.report.gamma_used)?;
        writeln!(out, "s,E,F,H,dFds,dissipation")?;
        for r in &self.rows {
            writeln!(out, "{:e},{:e},{:e},{:e},{:e},{:e}", r.s, r.e, r.f, r.h, r.dfds, r.dissipation)?;
        }
        Ok(())
    }
}

/// `E`, `F`, `H` and the dissipation along the frames of `history` at `r0`.
///
/// `gamma = None` uses the fitted `γ` (zero when no `γ` satisfies the
/// inequality on every row).
pub fn lyapunov_trace(
    history: &SolutionHistory,
    blowup_time: f64,
    r0: f64,
    s_values: &[f64],
    grid: &YGrid,
    gamma: Option<f64>,
) -> Result<LyapunovTrace> {
    if s_values.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "Lyapunov trace needs at least 3 similarity times, got {}",
            s_values.len()
        )));
    }
    if s_values.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("similarity times must be strictly increasing".into()));
    }
    let frames = s_values
        .par_iter()
        .map(|&s| to_similarity_frame(history, blowup_time, r0, s, grid))
        .collect::<Result<Vec<_>>>()?;
    let e: Vec<f64> = frames.iter().map(energy).collect();
    let f: Vec<f64> = frames.iter().map(corrected_energy).collect();
    let diss: Vec<f64> = frames.iter().map(dissipation).collect();
    let dfds = derivative(s_values, &f);
    let c = 2.0 / (history.params().p() - 1.0);

    let gamma_fit = fit_gamma(s_values, &f, &dfds, &diss, c);
    let gamma_used = gamma.or(gamma_fit).unwrap_or(0.0);
    let h = s_values.iter().zip(&f).map(|(&s, &fv)| lyapunov_from_f(fv, s, gamma_used)).collect::<Result<Vec<_>>>()?;

    let tolerance = H_TOLERANCE * h[0].abs().max(1.0);
    let mut max_rise = f64::NEG_INFINITY;
    let mut running_min = h[0];
    for &hv in &h[1..] {
        max_rise = max_rise.max(hv - running_min);
        running_min = running_min.min(hv);
    }
    let half = s_values.len() / 2;
    let rises: Vec<bool> = h.windows(2).map(|w| w[1] - w[0] > tolerance).collect();
    let early_rises = rises[..half.min(rises.len())].iter().filter(|&&x| x).count();
    let late_rises = rises[half.min(rises.len())..].iter().filter(|&&x| x).count();
    let inequality_violations = (0..s_values.len())
        .filter(|&k| {
            let bound = gamma_used * (-s_values[k]).exp() * f[k] - c * diss[k];
            dfds[k] > bound + tolerance
        })
        .count();

    let rows = (0..s_values.len())
        .map(|k| LyapunovRow { s: s_values[k], e: e[k], f: f[k], h: h[k], dfds: dfds[k], dissipation: diss[k] })
        .collect();
    Ok(LyapunovTrace {
        r0,
        blowup_time,
        rows,
        report: MonotonicityReport {
            gamma_fit,
            gamma_used,
            inequality_violations,
            max_rise,
            tolerance,
            non_increasing: max_rise <= tolerance,
            early_rises,
            late_rises,
        },
    })
}

/// Second-order finite differences on a non-uniform grid, one-sided at the ends.
fn derivative(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut d = vec![0.0; n];
    for k in 0..n {
        let (i0, i1, i2) = if k == 0 {
            (0, 1, 2)
        } else if k == n - 1 {
            (n - 3, n - 2, n - 1)
        } else {
            (k - 1, k, k + 1)
        };
        let (x0, x1, x2) = (x[i0], x[i1], x[i2]);
        let xk = x[k];
        // derivative of the quadratic interpolant through the three points
        let l0 = (2.0 * xk - x1 - x2) / ((x0 - x1) * (x0 - x2));
        let l1 = (2.0 * xk - x0 - x2) / ((x1 - x0) * (x1 - x2));
        let l2 = (2.0 * xk - x0 - x1) / ((x2 - x0) * (x2 - x1));
        d[k] = l0 * y[i0] + l1 * y[i1] + l2 * y[i2];
    }
    d
}

fn fit_gamma(s: &[f64], f: &[f64], dfds: &[f64], diss: &[f64], c: f64) -> Option<f64> {
    let mut lower: f64 = 0.0;
    let mut upper = f64::INFINITY;
    for k in 0..s.len() {
        let need = dfds[k] + c * diss[k];
        let scale = (-s[k]).exp() * f[k];
        if scale > 0.0 {
            lower = lower.max(need / scale);
        } else if scale < 0.0 {
            upper = upper.min(need / scale);
        } else if need > 0.0 {
            return None;
        }
    }
    (lower <= upper).then_some(lower)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundednessReport {
    /// `sup_{r,s} ∫ (w_y²(1-y²) + w² + w_s² + |w|^{p+1}) ρ dy`.
    pub supremum: f64,
    /// Per-center supremum `(r, T(r), sup)`.
    pub per_center: Vec<(f64, f64, f64)>,
    pub evaluated: usize,
    /// Frames outside the recorded data, not evaluated.
    pub skipped: usize,
    /// Some center grows by more than `divergence_factor` between the first
    /// and last thirds of its similarity times.
    pub diverging: bool,
    pub divergence_factor: f64,
}

/// Up to `count` centers `(r, T(r))` of the curve, evenly spread over `[r0/2, 3r0/2]`.
pub fn boundedness_centers(curve: &BlowupCurve, r0: f64, count: usize) -> Vec<(f64, f64)> {
    let count = count.max(1);
    (0..count)
        .filter_map(|k| {
            let r = if count == 1 { r0 } else { 0.5 * r0 + r0 * k as f64 / (count - 1) as f64 };
            curve.t_at(r).map(|t| (r, t))
        })
        .collect()
}

/// Supremum of the bounded quantity over `centers × s_values`.
pub fn boundedness_report(
    history: &SolutionHistory,
    centers: &[(f64, f64)],
    s_values: &[f64],
    grid: &YGrid,
    divergence_factor: f64,
) -> Result<BoundednessReport> {
    let per = centers
        .par_iter()
        .map(|&(r, t)| {
            let vals = s_values
                .iter()
                .map(|&s| match to_similarity_frame(history, t, r, s, grid) {
                    Ok(frame) => Ok(Some(boundedness_integral(&frame))),
                    Err(Error::OutOfRange(_)) => Ok(None),
                    Err(e) => Err(e),
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((vals, (r, t)))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut supremum: f64 = 0.0;
    let mut evaluated = 0;
    let mut skipped = 0;
    let mut diverging = false;
    let mut per_center = Vec::with_capacity(per.len());
    for (vals, (r, t)) in &per {
        let valid: Vec<f64> = vals.iter().flatten().copied().collect();
        evaluated += valid.len();
        skipped += vals.len() - valid.len();
        let sup = valid.iter().copied().fold(0.0, f64::max);
        supremum = supremum.max(sup);
        per_center.push((*r, *t, sup));
        let third = valid.len() / 3;
        if third >= 1 {
            let early = valid[..third].iter().copied().fold(0.0, f64::max);
            let late = valid[valid.len() - third..].iter().copied().fold(0.0, f64::max);
            if late > divergence_factor * early.max(f64::MIN_POSITIVE) && late > 0.0 {
                diverging = true;
            }
        }
    }
    if evaluated == 0 {
        return Err(Error::InsufficientData("no similarity frame inside the recorded data".into()));
    }
    Ok(BoundednessReport { supremum, per_center, evaluated, skipped, diverging, divergence_factor })
}
