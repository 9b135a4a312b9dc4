//! Damped Gauss–Newton with central-difference Jacobians and step halving.

use nalgebra::{DMatrix, DVector};

pub(crate) const MAX_ITERATIONS: usize = 200;

#[derive(Debug, Clone)]
pub(crate) struct LsqOutcome {
    pub x: Vec<f64>,
    /// `‖r(x)‖²`.
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn sq(r: &DVector<f64>) -> f64 {
    r.norm_squared()
}

/// Central-difference Jacobian of `residual` at `x`; one-sided where a
/// neighbour is inadmissible.
pub(crate) fn jacobian<R>(residual: &R, x: &[f64], r0: &DVector<f64>) -> Option<DMatrix<f64>>
where
    R: Fn(&[f64]) -> Option<DVector<f64>>,
{
    let m = r0.len();
    let mut jac = DMatrix::zeros(m, x.len());
    let mut xp = x.to_vec();
    for c in 0..x.len() {
        let step = 1e-6 * x[c].abs().max(1.0);
        xp[c] = x[c] + step;
        let plus = residual(&xp);
        xp[c] = x[c] - step;
        let minus = residual(&xp);
        xp[c] = x[c];
        let col = match (plus, minus) {
            (Some(p), Some(q)) => (p - q) / (2.0 * step),
            (Some(p), None) => (p - r0) / step,
            (None, Some(q)) => (r0 - q) / step,
            (None, None) => return None,
        };
        jac.set_column(c, &col);
    }
    Some(jac)
}

/// Minimises `‖r(x)‖²` from `x0`. `residual` returns `None` for inadmissible
/// parameters, which the line search never accepts.
pub(crate) fn minimize<R>(residual: R, x0: Vec<f64>, max_iterations: usize) -> Option<LsqOutcome>
where
    R: Fn(&[f64]) -> Option<DVector<f64>>,
{
    let mut x = x0;
    let mut r = residual(&x)?;
    let mut cost = sq(&r);
    let mut damping = 1e-9;
    for it in 0..max_iterations {
        if cost <= 1e-30 {
            return Some(LsqOutcome { x, cost, iterations: it, converged: true });
        }
        let jac = jacobian(&residual, &x, &r)?;
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &r;
        let mut accepted = None;
        while damping <= 1e12 {
            let mut a = jtj.clone();
            for i in 0..x.len() {
                a[(i, i)] += damping * jtj[(i, i)].max(1e-12);
            }
            let Some(delta) = a.cholesky().map(|c| c.solve(&(-&grad))) else {
                damping *= 10.0;
                continue;
            };
            let mut t = 1.0;
            for _ in 0..40 {
                let trial: Vec<f64> = x.iter().zip(delta.iter()).map(|(xi, di)| xi + t * di).collect();
                if let Some(rt) = residual(&trial) {
                    let ct = sq(&rt);
                    if ct < cost {
                        accepted = Some((trial, rt, ct, t * delta.norm()));
                        break;
                    }
                }
                t *= 0.5;
            }
            if accepted.is_some() {
                break;
            }
            damping *= 10.0;
        }
        let Some((trial, rt, ct, step)) = accepted else {
            // no descent direction left at working precision
            let converged = grad.norm() <= 1e-8 * cost.sqrt().max(1e-12) || cost < 1e-24;
            return Some(LsqOutcome { x, cost, iterations: it, converged });
        };
        let gain = cost - ct;
        let xnorm = trial.iter().map(|v| v * v).sum::<f64>().sqrt();
        x = trial;
        r = rt;
        cost = ct;
        damping = (damping * 0.1).max(1e-12);
        if step <= 1e-12 * (1.0 + xnorm) || gain <= 1e-15 * cost {
            return Some(LsqOutcome { x, cost, iterations: it + 1, converged: true });
        }
    }
    Some(LsqOutcome { x, cost, iterations: max_iterations, converged: false })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_a_linear_problem_in_one_step() {
        let res = |x: &[f64]| Some(DVector::from_vec(vec![x[0] - 1.0, 2.0 * (x[1] + 3.0), x[0] + x[1] + 2.0]));
        let out = minimize(res, vec![5.0, 5.0], 50).unwrap();
        assert!(out.converged);
        assert!((out.x[0] - 1.0).abs() < 1e-8 && (out.x[1] + 3.0).abs() < 1e-8);
    }

    #[test]
    fn rosenbrock_converges() {
        let res = |x: &[f64]| Some(DVector::from_vec(vec![1.0 - x[0], 10.0 * (x[1] - x[0] * x[0])]));
        let out = minimize(res, vec![-1.2, 1.0], MAX_ITERATIONS).unwrap();
        assert!(out.converged);
        assert!((out.x[0] - 1.0).abs() < 1e-6 && (out.x[1] - 1.0).abs() < 1e-6, "{:?}", out.x);
    }

    #[test]
    fn inadmissible_region_is_never_entered() {
        // minimum of (x - 2)² at x = 2, but only x < 1 is admissible
        let res = |x: &[f64]| (x[0] < 1.0).then(|| DVector::from_vec(vec![x[0] - 2.0]));
        let out = minimize(res, vec![0.0], MAX_ITERATIONS).unwrap();
        assert!(out.x[0] < 1.0 && out.x[0] > 0.99);
    }

    #[test]
    fn jacobian_matches_the_analytic_derivative() {
        let res = |x: &[f64]| Some(DVector::from_vec(vec![x[0].sin() * x[1], x[1].exp()]));
        let x = [0.3, -0.7];
        let r = res(&x).unwrap();
        let j = jacobian(&res, &x, &r).unwrap();
        assert!((j[(0, 0)] - 0.3f64.cos() * -0.7).abs() < 1e-8);
        assert!((j[(0, 1)] - 0.3f64.sin()).abs() < 1e-8);
        assert!(j[(1, 0)].abs() < 1e-12);
        assert!((j[(1, 1)] - (-0.7f64).exp()).abs() < 1e-8);
    }
}
