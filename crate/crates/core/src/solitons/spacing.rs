use serde::Serialize;

use super::MultiSolitonFit;
use crate::error::{Error, Result};
use crate::model::Params;
use crate::numeric::linear_fit;

const GAP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SpacingVerdict {
    /// Every adjacent gap grows with `log s` over the tail.
    Growing,
    NonGrowing,
    /// Some adjacent gap shrinks over the tail.
    Shrinking,
    /// Fewer than two solitons.
    NotApplicable,
}

/// Regression of the fitted angles `ζᵢ(s)` against `log s`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZetaTrace {
    pub k: usize,
    pub slopes: Vec<f64>,
    pub intercepts: Vec<f64>,
    pub r_squared: Vec<f64>,
    /// `(i - (k+1)/2)(p-1)/2` for `i = 1..=k`.
    pub predicted: Vec<f64>,
    /// Slope of each adjacent gap `ζᵢ₊₁ - ζᵢ` against `log s` over the tail.
    pub gap_slopes: Vec<f64>,
    /// Gaps never decrease from one sample to the next over the tail.
    pub gaps_nondecreasing: bool,
    pub verdict: SpacingVerdict,
    /// Index of the first sample of the tail (the second half of the trace).
    pub tail_start: usize,
}

/// Spacing report for fits sharing `k` and `e₁`, sampled at similarity
/// times `s > 0`.
pub fn zeta_trace(s: &[f64], fits: &[MultiSolitonFit], params: &Params) -> Result<ZetaTrace> {
    if s.len() != fits.len() {
        return Err(Error::Domain(format!("{} similarity times for {} fits", s.len(), fits.len())));
    }
    if fits.len() < 4 {
        return Err(Error::InsufficientData(format!("spacing report needs 4 fits, got {}", fits.len())));
    }
    let (k, e1) = (fits[0].k, fits[0].e1);
    if fits.iter().any(|f| f.k != k || f.e1 != e1 || f.zeta.len() != k) {
        return Err(Error::Domain("fits along a spacing trace must share k and e1".into()));
    }
    if s.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Domain("spacing regression needs s > 0".into()));
    }
    let log_s: Vec<f64> = s.iter().map(|v| v.ln()).collect();
    let half_p = 0.5 * (params.p() - 1.0);
    let mut slopes = Vec::with_capacity(k);
    let mut intercepts = Vec::with_capacity(k);
    let mut r_squared = Vec::with_capacity(k);
    for i in 0..k {
        let zeta: Vec<f64> = fits.iter().map(|f| f.zeta[i]).collect();
        let fit =
            linear_fit(&log_s, &zeta).ok_or_else(|| Error::InsufficientData("similarity times do not vary".into()))?;
        slopes.push(fit.slope);
        intercepts.push(fit.intercept);
        r_squared.push(fit.r_squared);
    }
    let predicted = (1..=k).map(|i| (i as f64 - 0.5 * (k as f64 + 1.0)) * half_p).collect();

    let tail_start = fits.len() / 2;
    let tail_len = fits.len() - tail_start;
    let mut gap_slopes = Vec::new();
    let mut gaps_nondecreasing = true;
    for i in 0..k.saturating_sub(1) {
        let gaps: Vec<f64> = fits[tail_start..].iter().map(|f| f.zeta[i + 1] - f.zeta[i]).collect();
        gaps_nondecreasing &= gaps.windows(2).all(|w| w[1] >= w[0] - GAP_TOL);
        let slope = if tail_len >= 2 { linear_fit(&log_s[tail_start..], &gaps).map_or(0.0, |f| f.slope) } else { 0.0 };
        gap_slopes.push(slope);
    }
    let verdict = if k < 2 {
        SpacingVerdict::NotApplicable
    } else if gap_slopes.iter().any(|&g| g < -GAP_TOL) {
        SpacingVerdict::Shrinking
    } else if gap_slopes.iter().all(|&g| g > GAP_TOL) {
        SpacingVerdict::Growing
    } else {
        SpacingVerdict::NonGrowing
    };
    Ok(ZetaTrace { k, slopes, intercepts, r_squared, predicted, gap_slopes, gaps_nondecreasing, verdict, tail_start })
}
