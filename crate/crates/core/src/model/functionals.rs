//! Weighted norms and the functionals `E`, `F`, `H` evaluated on frames.

use super::frame::SimilarityFrame;
use super::grid::YGrid;
use super::soliton::{kappa, rho_unchecked};
use super::Params;
use crate::error::{Error, Result};
use crate::numeric::{pow_nonneg, signed_power};

/// `‖(w, ∂_s w)‖_𝓗 = (∫ (w² + w_y²(1-y²) + w_s²) ρ dy)^{1/2}`.
pub fn h_norm(frame: &SimilarityFrame) -> f64 {
    h_norm_squared(frame).max(0.0).sqrt()
}

pub(crate) fn h_norm_squared(frame: &SimilarityFrame) -> f64 {
    let (y, w, ws, wy) = (frame.y(), frame.w(), frame.ws(), frame.wy());
    frame.weighted_integral(|j| w[j] * w[j] + wy[j] * wy[j] * (1.0 - y[j] * y[j]) + ws[j] * ws[j])
}

/// `𝓗` distance between the frame and a model state `(m, m_s)` with
/// derivative `m_y`, all sampled on the frame grid.
pub fn h_distance(frame: &SimilarityFrame, m: &[f64], ms: &[f64], my: &[f64]) -> f64 {
    let (y, w, ws, wy) = (frame.y(), frame.w(), frame.ws(), frame.wy());
    frame
        .weighted_integral(|j| {
            let a = w[j] - m[j];
            let b = wy[j] - my[j];
            let c = ws[j] - ms[j];
            a * a + b * b * (1.0 - y[j] * y[j]) + c * c
        })
        .max(0.0)
        .sqrt()
}

/// Energy `E(w) = ∫ (½w_s² + ½w_y²(1-y²) + (p+1)/(p-1)² w² - |w|^{p+1}/(p+1)) ρ dy`.
pub fn energy(frame: &SimilarityFrame) -> f64 {
    let p = frame.params().p();
    let c = 0.5 * frame.params().linear_coefficient();
    let (y, w, ws, wy) = (frame.y(), frame.w(), frame.ws(), frame.wy());
    frame.weighted_integral(|j| {
        0.5 * ws[j] * ws[j] + 0.5 * wy[j] * wy[j] * (1.0 - y[j] * y[j]) + c * w[j] * w[j]
            - pow_nonneg(w[j].abs(), p + 1.0) / (p + 1.0)
    })
}

/// `F(w, s) = E(w) - e^{-s} ∫ w ∂_s w ρ dy`.
pub fn corrected_energy(frame: &SimilarityFrame) -> f64 {
    let (w, ws) = (frame.w(), frame.ws());
    energy(frame) - (-frame.s()).exp() * frame.weighted_integral(|j| w[j] * ws[j])
}

/// Lyapunov functional `H = F · exp(γ e^{-s})`.
///
/// With `F' ≤ γ e^{-s} F - (2/(p-1)) ∫ w_s² ρ/(1-y²)`, this is the
/// exponential factor for which `H' ≤ 0`.
pub fn lyapunov_functional(frame: &SimilarityFrame, gamma: f64) -> Result<f64> {
    lyapunov_from_f(corrected_energy(frame), frame.s(), gamma)
}

/// `H` from a precomputed value of `F`.
pub fn lyapunov_from_f(f: f64, s: f64, gamma: f64) -> Result<f64> {
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::Domain(format!("γ must be finite and >= 0, got {gamma}")));
    }
    Ok(f * (gamma * (-s).exp()).exp())
}

/// Dissipation `∫ w_s² ρ/(1-y²) dy`.
pub fn dissipation(frame: &SimilarityFrame) -> f64 {
    let (y, ws) = (frame.y(), frame.ws());
    frame.weighted_integral(|j| ws[j] * ws[j] / (1.0 - y[j] * y[j]))
}

/// `∫ w ∂_s w ρ dy`, the correction integral of `F`.
pub fn correction_integral(frame: &SimilarityFrame) -> f64 {
    let (w, ws) = (frame.w(), frame.ws());
    frame.weighted_integral(|j| w[j] * ws[j])
}

/// `∫ (w_y²(1-y²) + w² + w_s² + |w|^{p+1}) ρ dy`, the quantity bounded
/// uniformly in `r0` and `s`.
pub fn boundedness_integral(frame: &SimilarityFrame) -> f64 {
    let p = frame.params().p();
    let (y, w, ws, wy) = (frame.y(), frame.w(), frame.ws(), frame.wy());
    frame.weighted_integral(|j| {
        wy[j] * wy[j] * (1.0 - y[j] * y[j]) + w[j] * w[j] + ws[j] * ws[j] + pow_nonneg(w[j].abs(), p + 1.0)
    })
}

/// `∫ h² ρ/(1-y²) / (∫ h² ρ + ∫ h'² ρ (1-y²))`.
pub fn hardy_sobolev_ratio(grid: &YGrid, h: &[f64], hp: &[f64], params: &Params) -> Result<f64> {
    let n = grid.len();
    if h.len() != n || hp.len() != n {
        return Err(Error::GridMismatch(format!("expected {n} samples, got {} and {}", h.len(), hp.len())));
    }
    let y = grid.nodes();
    let q = grid.weights();
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..n {
        let om = 1.0 - y[j] * y[j];
        let rho = rho_unchecked(y[j], params);
        num += q[j] * h[j] * h[j] * rho / om;
        den += q[j] * (h[j] * h[j] + hp[j] * hp[j] * om) * rho;
    }
    if !(den > 0.0) {
        return Err(Error::Domain("Hardy–Sobolev ratio of the zero function".into()));
    }
    Ok(num / den)
}

/// `(1-y²) f'' - 2(a+1) y f'` with `a = 2/(p-1)`, i.e. `(1/ρ) ∂_y(ρ(1-y²) ∂_y f)`,
/// by central differences on a uniform grid. Endpoints are left at zero.
pub(crate) fn weighted_laplacian(y: &[f64], h: f64, f: &[f64], params: &Params) -> Vec<f64> {
    let n = y.len();
    let b = 2.0 * (params.rate_exponent() + 1.0);
    let mut out = vec![0.0; n];
    for j in 1..n - 1 {
        let f2 = (f[j + 1] - 2.0 * f[j] + f[j - 1]) / (h * h);
        let f1 = (f[j + 1] - f[j - 1]) / (2.0 * h);
        out[j] = (1.0 - y[j] * y[j]) * f2 - b * y[j] * f1;
    }
    out
}

/// ρ-weighted L² norm, over the interior of a uniform grid, of the
/// stationary similarity equation applied to `κ(d)`:
/// `(1/ρ)∂_y(ρ(1-y²)∂_y κ) - 2(p+1)/(p-1)² κ + |κ|^{p-1}κ`.
pub fn stationary_residual(d: f64, params: &Params, grid: &YGrid) -> Result<f64> {
    let h = grid.spacing().ok_or_else(|| Error::Domain("stationary residual needs a uniform y-grid".into()))?;
    let y = grid.nodes();
    let k = y.iter().map(|&yj| kappa(d, yj, params)).collect::<Result<Vec<_>>>()?;
    let lap = weighted_laplacian(y, h, &k, params);
    let c = params.linear_coefficient();
    let p = params.p();
    let q = grid.weights();
    let mut sum = 0.0;
    for j in 1..y.len() - 1 {
        let r = lap[j] - c * k[j] + signed_power(k[j], p);
        sum += q[j] * rho_unchecked(y[j], params) * r * r;
    }
    Ok(sum.sqrt())
}
