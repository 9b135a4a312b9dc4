use gauss_quad::legendre::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default distance kept from the degenerate endpoints `y = ±1`.
pub const DEFAULT_ETA: f64 = 1e-3;

/// Quadrature rule attached to a [`YGrid`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum QuadratureKind {
    /// Composite trapezoid on a uniform grid over `[-1+η, 1-η]`.
    Uniform { eta: f64, spacing: f64 },
    /// Composite trapezoid on caller-supplied nodes.
    Trapezoid,
    /// Gauss–Legendre on the full interval `(-1, 1)`; meant for closed-form data.
    GaussLegendre,
}

/// Sample points in `(-1, 1)` together with quadrature weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    kind: QuadratureKind,
}

impl YGrid {
    /// Uniform grid of `n` nodes on `[-1+η, 1-η]`.
    pub fn uniform(n: usize, eta: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::Domain(format!("a y-grid needs at least 3 nodes, got {n}")));
        }
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::Domain(format!("truncation η must lie in (0, 1), got {eta}")));
        }
        let lo = -1.0 + eta;
        let spacing = 2.0 * (1.0 - eta) / (n - 1) as f64;
        let mut nodes: Vec<f64> = (0..n).map(|j| lo + spacing * j as f64).collect();
        // pin the last node so the grid is symmetric to rounding
        nodes[n - 1] = 1.0 - eta;
        let weights = trapezoid_weights(&nodes);
        Ok(Self { nodes, weights, kind: QuadratureKind::Uniform { eta, spacing } })
    }

    /// Gauss–Legendre nodes and weights of the given degree on `(-1, 1)`.
    pub fn gauss_legendre(degree: usize) -> Result<Self> {
        let rule = GaussLegendre::new(degree)
            .map_err(|_| Error::Domain(format!("Gauss–Legendre degree {degree} is below 2")))?;
        let mut pairs: Vec<(f64, f64)> = rule.into_node_weight_pairs();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (nodes, weights) = pairs.into_iter().unzip();
        Ok(Self { nodes, weights, kind: QuadratureKind::GaussLegendre })
    }

    /// Trapezoid rule on arbitrary strictly increasing nodes inside `(-1, 1)`.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::Domain(format!("a y-grid needs at least 3 nodes, got {}", nodes.len())));
        }
        if nodes.iter().any(|y| !(y.abs() < 1.0)) {
            return Err(Error::Domain("y-grid nodes must lie in (-1, 1)".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("y-grid nodes must be strictly increasing".into()));
        }
        let weights = trapezoid_weights(&nodes);
        Ok(Self { nodes, weights, kind: QuadratureKind::Trapezoid })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kind(&self) -> QuadratureKind {
        self.kind
    }

    /// Uniform spacing, if the grid is uniform.
    pub fn spacing(&self) -> Option<f64> {
        match self.kind {
            QuadratureKind::Uniform { spacing, .. } => Some(spacing),
            _ => None,
        }
    }

    /// `Σ q_j f_j`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        self.weights.iter().zip(values).map(|(q, f)| q * f).sum()
    }

    /// First derivative by three-point differences (second order on any
    /// smooth node distribution, one-sided at the ends).
    pub fn derivative(&self, values: &[f64]) -> Vec<f64> {
        let y = &self.nodes;
        let n = y.len();
        let mut out = vec![0.0; n];
        for j in 0..n {
            let (a, b, c) = if j == 0 {
                (0, 1, 2)
            } else if j == n - 1 {
                (n - 3, n - 2, n - 1)
            } else {
                (j - 1, j, j + 1)
            };
            out[j] = lagrange_derivative([y[a], y[b], y[c]], [values[a], values[b], values[c]], y[j]);
        }
        out
    }
}

fn trapezoid_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut weights = vec![0.0; n];
    for j in 0..n - 1 {
        let half = 0.5 * (nodes[j + 1] - nodes[j]);
        weights[j] += half;
        weights[j + 1] += half;
    }
    weights
}

/// Derivative at `x` of the parabola through three points.
fn lagrange_derivative(y: [f64; 3], f: [f64; 3], x: f64) -> f64 {
    let [y0, y1, y2] = y;
    let [f0, f1, f2] = f;
    f0 * ((x - y1) + (x - y2)) / ((y0 - y1) * (y0 - y2))
        + f1 * ((x - y0) + (x - y2)) / ((y1 - y0) * (y1 - y2))
        + f2 * ((x - y0) + (x - y1)) / ((y2 - y0) * (y2 - y1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_grid_is_symmetric_and_truncated() {
        let g = YGrid::uniform(201, 1e-3).unwrap();
        assert_eq!(g.nodes()[0], -0.999);
        assert_eq!(g.nodes()[200], 0.999);
        assert!(g.nodes()[100].abs() < 1e-15);
        let total: f64 = g.weights().iter().sum();
        assert!((total - 1.998).abs() < 1e-13);
    }

    #[test]
    fn gauss_legendre_is_exact_on_polynomials() {
        let g = YGrid::gauss_legendre(20).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|y| 1.0 - y * y).collect();
        assert!((g.integrate(&f) - 4.0 / 3.0).abs() < 1e-14);
        assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn rejects_bad_nodes() {
        assert!(YGrid::from_nodes(vec![-0.5, 0.0]).is_err());
        assert!(YGrid::from_nodes(vec![-1.0, 0.0, 0.5]).is_err());
        assert!(YGrid::from_nodes(vec![-0.5, 0.2, 0.1]).is_err());
        assert!(YGrid::uniform(2, 1e-3).is_err());
        assert!(YGrid::uniform(10, 0.0).is_err());
    }

    #[test]
    fn derivative_is_exact_on_quadratics() {
        let g = YGrid::from_nodes(vec![-0.9, -0.7, -0.2, 0.1, 0.15, 0.6, 0.8]).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|y| 3.0 * y * y - y + 2.0).collect();
        let df = g.derivative(&f);
        for (y, d) in g.nodes().iter().zip(&df) {
            assert!((d - (6.0 * y - 1.0)).abs() < 1e-12);
        }
    }
}
