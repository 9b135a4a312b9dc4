//! Modulation fits of similarity frames against one soliton `θκ(d)` or an
//! alternating sum of distorted solitons `κ*(dᵢ, νᵢ)`, and the spacing
//! dynamics of the fitted hyperbolic angles.

mod lsq;
mod multi;
mod single;
mod spacing;

pub use multi::{
    fit_multi, fit_multi_relaxed, select_k, write_fit_csv, KSelection, MultiSolitonFit, RelaxedFit, K_THRESHOLD,
};
pub use single::{fit_single, SolitonFit};
pub use spacing::{zeta_trace, SpacingVerdict, ZetaTrace};

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::model::soliton::{kappa_star_dy_unchecked, kappa_star_unchecked};
use crate::model::{Params, SimilarityFrame, SolitonParams, YGrid};

/// Largest `|ζ|` the fits explore; `tanh` saturates in double precision
/// shortly after.
pub(crate) const ZETA_LIMIT: f64 = 15.0;

/// Stationary frame sampling `Σ θᵢ κ*(dᵢ, νᵢ, y)` with `∂_s w = 0`.
pub fn soliton_frame(
    params: Params,
    r0: f64,
    s: f64,
    grid: YGrid,
    solitons: &[SolitonParams],
) -> Result<SimilarityFrame> {
    for sol in solitons {
        for &y in [-1.0, 1.0].iter() {
            if !(1.0 + sol.d * y + sol.nu > 0.0) {
                return Err(Error::Domain(format!("1 + d y + ν vanishes on [-1, 1] for {sol:?}")));
            }
        }
    }
    let (w, wy) = profile(&params, grid.nodes(), solitons.iter().map(|s| (s.theta, s.d, s.nu)));
    let n = grid.len();
    SimilarityFrame::new(params, r0, s, grid, w, vec![0.0; n], wy)
}

/// `(Σ θ κ*, Σ θ ∂_y κ*)` on `y`.
pub(crate) fn profile(
    params: &Params,
    y: &[f64],
    solitons: impl Iterator<Item = (f64, f64, f64)> + Clone,
) -> (Vec<f64>, Vec<f64>) {
    let mut w = vec![0.0; y.len()];
    let mut wy = vec![0.0; y.len()];
    for (theta, d, nu) in solitons {
        for (j, &yj) in y.iter().enumerate() {
            w[j] += theta * kappa_star_unchecked(d, nu, yj, params);
            wy[j] += theta * kappa_star_dy_unchecked(d, nu, yj, params);
        }
    }
    (w, wy)
}

/// Weighted samples of a frame, so that the Euclidean norm of
/// [`FrameData::residual`] is the `𝓗` distance to the model.
pub(crate) struct FrameData<'a> {
    pub params: Params,
    pub y: &'a [f64],
    sw: Vec<f64>,
    swy: Vec<f64>,
    w: &'a [f64],
    wy: &'a [f64],
    ws_part: f64,
}

impl<'a> FrameData<'a> {
    pub fn new(frame: &'a SimilarityFrame) -> Self {
        let q = frame.grid().weights();
        let rho = frame.rho();
        let y = frame.y();
        let sw: Vec<f64> = (0..frame.len()).map(|j| (q[j] * rho[j]).sqrt()).collect();
        let swy = (0..frame.len()).map(|j| sw[j] * (1.0 - y[j] * y[j]).sqrt()).collect();
        let ws = frame.ws();
        let ws_part = frame.weighted_integral(|j| ws[j] * ws[j]);
        Self { params: *frame.params(), y, sw, swy, w: frame.w(), wy: frame.wy(), ws_part }
    }

    /// Residual vector of the model `(m, 0)` with derivative `m_y`.
    pub fn residual(&self, m: &[f64], my: &[f64]) -> DVector<f64> {
        let n = self.y.len();
        DVector::from_iterator(
            2 * n,
            (0..n).map(|j| self.sw[j] * (self.w[j] - m[j])).chain((0..n).map(|j| self.swy[j] * (self.wy[j] - my[j]))),
        )
    }

    /// `𝓗` distance from a residual cost `‖r‖²`.
    pub fn distance(&self, cost: f64) -> f64 {
        (cost + self.ws_part).max(0.0).sqrt()
    }
}
