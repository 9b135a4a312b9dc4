use crate::error::{Error, Result};
use crate::model::SimilarityFrame;
use crate::numeric::signed_power;

/// ρ-weighted L² norm of `∂²_s w - RHS` for the similarity equation
///
/// `∂²_s w = ℒw - 2(p+1)/(p-1)² w + |w|^{p-1}w - (p+3)/(p-1) ∂_s w - 2y ∂²_{ys} w
///          + e^{-s} (N-1)/(r0 + y e^{-s}) ∂_y w`
///
/// evaluated at the middle of three frames at `s - Δs, s, s + Δs`.
/// `∂²_s w` is the centred difference of the recorded `∂_s w`; `y`
/// derivatives use the grid's three-point rule. `radial_term = false` drops
/// the last term.
pub fn eqw_residual(frames: &[SimilarityFrame; 3], radial_term: bool) -> Result<f64> {
    let [lo, mid, hi] = frames;
    let n = mid.len();
    for f in [lo, hi] {
        if f.len() != n || f.y() != mid.y() {
            return Err(Error::GridMismatch("frames must share the y-grid".into()));
        }
        if f.r0() != mid.r0() || f.params() != mid.params() {
            return Err(Error::GridMismatch("frames must share r0 and parameters".into()));
        }
    }
    let ds = mid.s() - lo.s();
    if !(ds > 0.0) || ((hi.s() - mid.s()) - ds).abs() > 1e-9 * ds.max(1.0) {
        return Err(Error::Domain(format!(
            "frames must be equally spaced in s, got {}, {}, {}",
            lo.s(),
            mid.s(),
            hi.s()
        )));
    }
    let params = mid.params();
    let p = params.p();
    let a = params.rate_exponent();
    let grid = mid.grid();
    let y = mid.y();
    let (w, ws, wy) = (mid.w(), mid.ws(), mid.wy());
    let wyy = grid.derivative(wy);
    let wys = grid.derivative(ws);
    let e = (-mid.s()).exp();
    let dims = f64::from(params.n()) - 1.0;
    let c = params.linear_coefficient();
    let damping = (p + 3.0) / (p - 1.0);
    let res: Vec<f64> = (0..n)
        .map(|j| {
            let wss = (hi.ws()[j] - lo.ws()[j]) / (2.0 * ds);
            let lw = (1.0 - y[j] * y[j]) * wyy[j] - 2.0 * (a + 1.0) * y[j] * wy[j];
            let mut rhs = lw - c * w[j] + signed_power(w[j], p) - damping * ws[j] - 2.0 * y[j] * wys[j];
            if radial_term {
                rhs += e * dims / (mid.r0() + y[j] * e) * wy[j];
            }
            wss - rhs
        })
        .collect();
    Ok(mid.weighted_integral(|j| res[j] * res[j]).max(0.0).sqrt())
}

/// Bound `(2/r0)(N-1) e^{-s} ‖∂_y w‖_{L²_ρ}` on the radial term of the
/// similarity equation, valid once `e^{-s} ≤ r0/2`.
pub fn radial_term_bound(frame: &SimilarityFrame) -> f64 {
    let wy = frame.wy();
    let norm = frame.weighted_integral(|j| wy[j] * wy[j]).max(0.0).sqrt();
    2.0 / frame.r0() * (f64::from(frame.params().n()) - 1.0) * (-frame.s()).exp() * norm
}
