//! Similarity frames `w_{r0}(y, s)` extracted from solver histories, the
//! residual of the similarity equation, Lyapunov traces and boundedness
//! reports.

mod lyapunov;
mod residual;

pub use lyapunov::{
    boundedness_centers, boundedness_report, lyapunov_trace, BoundednessReport, LyapunovRow, LyapunovTrace,
    MonotonicityReport, H_TOLERANCE,
};
pub use residual::{eqw_residual, radial_term_bound};

use crate::error::{Error, Result};
use crate::model::{SimilarityFrame, YGrid};
use crate::solver::{BlowupCurve, SolutionHistory};

/// Frame of `history` centred at `r0` at similarity time `s`, for the blow-up
/// time `blowup_time = T(r0)`.
///
/// With `t = T - e^{-s}` and `r = r0 + y e^{-s}`:
/// `w = e^{-as} u`, `∂_y w = e^{-(a+1)s} u_r` and
/// `∂_s w = e^{-as} (-a u + e^{-s} (u_t - y u_r))`, `a = 2/(p-1)`.
pub fn to_similarity_frame(
    history: &SolutionHistory,
    blowup_time: f64,
    r0: f64,
    s: f64,
    grid: &YGrid,
) -> Result<SimilarityFrame> {
    if !(r0 > 0.0) {
        return Err(Error::Domain(format!("frame center must be > 0, got {r0}")));
    }
    let scale = (-s).exp();
    if !(scale <= blowup_time && scale <= 0.5 * r0) {
        return Err(Error::OutOfRange(format!(
            "e^-s = {scale:.4e} exceeds min(T(r0), r0/2) = {:.4e}",
            blowup_time.min(0.5 * r0)
        )));
    }
    let params = *history.params();
    let a = params.rate_exponent();
    let t = blowup_time - scale;
    let amp = scale.powf(a);
    let n = grid.len();
    let (mut w, mut ws, mut wy) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for &y in grid.nodes() {
        let (u, ut, ur) = history.sample(r0 + y * scale, t)?;
        w.push(amp * u);
        wy.push(amp * scale * ur);
        ws.push(amp * (-a * u + scale * (ut - y * ur)));
    }
    SimilarityFrame::new(params, r0, s, grid.clone(), w, ws, wy)
}

/// Trusted similarity-time window `[s_min, s_max]` for a probe.
///
/// `s_min = max(-log T(r0) + 1, -log(r0/2))`; `s_max = -log(gap) - 1` with
/// `gap` the larger of the extrapolation gap `T(r0) - t_death` at the probe
/// node and `min_cells · h`, so the frame spans at least that many cells.
pub fn frame_s_range(history: &SolutionHistory, curve: &BlowupCurve, r0: f64, min_cells: f64) -> Result<(f64, f64)> {
    let k = curve.nearest(r0).ok_or_else(|| Error::InsufficientData("empty blow-up curve".into()))?;
    let t0 = curve.t_at(r0).ok_or_else(|| Error::OutOfRange(format!("no blow-up time at r0 = {r0}")))?;
    let death = history.deaths()[curve.node[k]].map(|d| d.time).unwrap_or_else(|| history.end_time());
    let gap = (t0 - death).max(min_cells * history.spacing());
    let s_min = (1.0 - t0.ln()).max(-(0.5 * r0).ln());
    let s_max = -gap.ln() - 1.0;
    if !(s_max > s_min) {
        return Err(Error::InsufficientData(format!("empty similarity window at r0 = {r0}: [{s_min:.3}, {s_max:.3}]")));
    }
    Ok((s_min, s_max))
}

/// `count` equally spaced values covering `[lo, hi]`.
pub fn s_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![lo];
    }
    (0..count).map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64).collect()
}
