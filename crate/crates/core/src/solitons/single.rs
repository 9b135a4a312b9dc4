use serde::Serialize;

use super::lsq::{minimize, MAX_ITERATIONS};
use super::{profile, FrameData, ZETA_LIMIT};
use crate::error::Result;
use crate::model::SimilarityFrame;

/// Best single-soliton approximation `θκ(d)` of a frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolitonFit {
    pub theta: f64,
    pub d: f64,
    /// `𝓗` distance between the frame and `(θκ(d), 0)`.
    pub residual: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl SolitonFit {
    /// `ζ = -argth d`.
    pub fn zeta(&self) -> f64 {
        -self.d.atanh()
    }
}

const SCAN_LIMIT: f64 = 5.0;
const SCAN_STEP: f64 = 0.02;

/// Minimises `‖(w, ∂_s w) - θ(κ(d), 0)‖_𝓗` over `θ = ±1` and `d = -tanh ζ`.
///
/// Each branch scans `ζ ∈ [-5, 5]` and refines the best scan point by
/// Gauss–Newton in `ζ`; the better branch is returned.
pub fn fit_single(frame: &SimilarityFrame) -> Result<SolitonFit> {
    let data = FrameData::new(frame);
    let residual = |theta: f64, zeta: f64| {
        if zeta.abs() > ZETA_LIMIT {
            return None;
        }
        let d = -zeta.tanh();
        let (m, my) = profile(&data.params, data.y, std::iter::once((theta, d, 0.0)));
        Some(data.residual(&m, &my))
    };
    let steps = (2.0 * SCAN_LIMIT / SCAN_STEP).round() as usize;
    let mut best: Option<SolitonFit> = None;
    for theta in [1.0, -1.0] {
        let (z0, _) = (0..=steps)
            .map(|k| -SCAN_LIMIT + SCAN_STEP * k as f64)
            .filter_map(|z| residual(theta, z).map(|r| (z, r.norm_squared())))
            .fold((0.0, f64::INFINITY), |acc, (z, c)| if c < acc.1 { (z, c) } else { acc });
        let Some(out) = minimize(|x: &[f64]| residual(theta, x[0]), vec![z0], MAX_ITERATIONS) else {
            continue;
        };
        let fit = SolitonFit {
            theta,
            d: -out.x[0].tanh(),
            residual: data.distance(out.cost),
            converged: out.converged,
            iterations: out.iterations,
        };
        if best.is_none_or(|b| fit.residual < b.residual) {
            best = Some(fit);
        }
    }
    Ok(best.expect("the ζ = 0 soliton is always admissible"))
}

#[cfg(test)]
mod tests {
    use crate::model::soliton::kappa_star_unchecked;
    use crate::model::{Params, YGrid};
    use crate::solitons::lsq::jacobian;

    #[test]
    fn zeta_jacobian_matches_the_analytic_derivative() {
        // ∂κ/∂ζ = -(1-d²) ∂κ/∂d, ∂κ/∂d = κ (-a d/(1-d²) - a y/(1+dy))
        let params = Params::new(3.0, 3).unwrap();
        let a = params.rate_exponent();
        let grid = YGrid::uniform(11, 0.05).unwrap();
        let y = grid.nodes();
        let res = |x: &[f64]| {
            let d = -x[0].tanh();
            Some(nalgebra::DVector::from_iterator(
                y.len(),
                y.iter().map(|&yj| kappa_star_unchecked(d, 0.0, yj, &params)),
            ))
        };
        let zeta = 0.4;
        let r = res(&[zeta]).unwrap();
        let jac = jacobian(&res, &[zeta], &r).unwrap();
        let d = -zeta.tanh();
        for (j, &yj) in y.iter().enumerate() {
            let k = kappa_star_unchecked(d, 0.0, yj, &params);
            let dk_dd = k * (-a * d / (1.0 - d * d) - a * yj / (1.0 + d * yj));
            let exact = -(1.0 - d * d) * dk_dd;
            assert!((jac[(j, 0)] - exact).abs() < 1e-7 * exact.abs().max(1.0));
        }
    }
}
