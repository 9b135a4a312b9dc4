//! The weight `ρ`, the stationary solitons `κ(d, y)` and their distorted
//! counterparts `κ*(d, ν, y)`.

use serde::{Deserialize, Serialize};

use super::Params;
use crate::error::{Error, Result};
use crate::numeric::pow_nonneg;

/// `ρ(y) = (1 - y²)^{2/(p-1)}` on `|y| < 1`.
pub fn rho_weight(y: f64, params: &Params) -> Result<f64> {
    if !(y.abs() < 1.0) {
        return Err(Error::Domain(format!("weight evaluated at |y| = {} >= 1", y.abs())));
    }
    Ok(rho_unchecked(y, params))
}

#[inline]
pub(crate) fn rho_unchecked(y: f64, params: &Params) -> f64 {
    pow_nonneg(1.0 - y * y, params.rate_exponent())
}

/// Soliton `κ(d, y) = κ₀ (1-d²)^{1/(p-1)} / (1 + d y)^{2/(p-1)}`.
pub fn kappa(d: f64, y: f64, params: &Params) -> Result<f64> {
    if !(d.abs() < 1.0) {
        return Err(Error::Domain(format!("soliton velocity |d| = {} >= 1", d.abs())));
    }
    if !(y.abs() < 1.0) {
        return Err(Error::Domain(format!("soliton evaluated at |y| = {} >= 1", y.abs())));
    }
    Ok(kappa_star_unchecked(d, 0.0, y, params))
}

/// Parameters of one (possibly distorted) soliton.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolitonParams {
    /// Sign, `+1` or `-1`.
    pub theta: f64,
    /// Velocity parameter in `(-1, 1)`.
    pub d: f64,
    /// Shift, only used by `κ*`.
    pub nu: f64,
}

impl SolitonParams {
    pub fn new(theta: f64, d: f64, nu: f64) -> Result<Self> {
        if theta != 1.0 && theta != -1.0 {
            return Err(Error::Domain(format!("soliton sign must be ±1, got {theta}")));
        }
        if !(d.abs() < 1.0) {
            return Err(Error::Domain(format!("soliton velocity |d| = {} >= 1", d.abs())));
        }
        if !(nu >= -(1.0 - d.abs())) {
            return Err(Error::Domain(format!("shift ν = {nu} below -(1 - |d|) = {}", -(1.0 - d.abs()))));
        }
        Ok(Self { theta, d, nu })
    }

    /// Hyperbolic angle `ζ = -argth d`.
    pub fn zeta(&self) -> f64 {
        -self.d.atanh()
    }
}

/// Distorted soliton `κ*(d, ν, y) = κ₀ (1-d²)^{1/(p-1)} / (1 + d y + ν)^{2/(p-1)}`.
///
/// The sign `theta` of `soliton` is not applied.
pub fn kappa_star(soliton: &SolitonParams, y: f64, params: &Params) -> Result<f64> {
    let base = 1.0 + soliton.d * y + soliton.nu;
    if !(base > 0.0) {
        return Err(Error::Domain(format!("1 + d y + ν = {base} is not positive")));
    }
    if !(soliton.d.abs() < 1.0) {
        return Err(Error::Domain(format!("soliton velocity |d| = {} >= 1", soliton.d.abs())));
    }
    Ok(kappa_star_unchecked(soliton.d, soliton.nu, y, params))
}

#[inline]
pub(crate) fn kappa_star_unchecked(d: f64, nu: f64, y: f64, params: &Params) -> f64 {
    let a = params.rate_exponent();
    params.kappa0() * pow_nonneg(1.0 - d * d, 0.5 * a) * pow_nonneg(1.0 + d * y + nu, -a)
}

/// `∂_y κ*(d, ν, y) = -(2/(p-1)) d κ* / (1 + d y + ν)`.
#[inline]
pub(crate) fn kappa_star_dy_unchecked(d: f64, nu: f64, y: f64, params: &Params) -> f64 {
    let base = 1.0 + d * y + nu;
    -params.rate_exponent() * d * kappa_star_unchecked(d, nu, y, params) / base
}

/// `∂_y κ(d, y)`.
pub fn kappa_dy(d: f64, y: f64, params: &Params) -> Result<f64> {
    kappa(d, y, params)?;
    Ok(kappa_star_dy_unchecked(d, 0.0, y, params))
}
