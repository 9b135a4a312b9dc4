use serde::Serialize;

use super::grid::YGrid;
use super::soliton::rho_unchecked;
use super::Params;
use crate::error::{Error, Result};

/// Samples of `(w, ∂_s w, ∂_y w)` on a y-grid at one similarity time `s`
/// for one center `r0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimilarityFrame {
    params: Params,
    r0: f64,
    s: f64,
    grid: YGrid,
    w: Vec<f64>,
    ws: Vec<f64>,
    wy: Vec<f64>,
    #[serde(skip)]
    rho: Vec<f64>,
}

impl SimilarityFrame {
    pub fn new(params: Params, r0: f64, s: f64, grid: YGrid, w: Vec<f64>, ws: Vec<f64>, wy: Vec<f64>) -> Result<Self> {
        if !(r0 > 0.0) || !r0.is_finite() {
            return Err(Error::Domain(format!("frame center r0 must be > 0, got {r0}")));
        }
        if !s.is_finite() {
            return Err(Error::Domain(format!("similarity time must be finite, got {s}")));
        }
        let n = grid.len();
        for (name, v) in [("w", &w), ("ws", &ws), ("wy", &wy)] {
            if v.len() != n {
                return Err(Error::GridMismatch(format!("{name} has {} samples, grid has {n}", v.len())));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Domain(format!("{name} contains non-finite samples")));
            }
        }
        let rho = grid.nodes().iter().map(|&y| rho_unchecked(y, &params)).collect();
        Ok(Self { params, r0, s, grid, w, ws, wy, rho })
    }

    /// Frame sampling a closed-form profile `w(y)` with `∂_s w = 0`.
    pub fn stationary<F, G>(params: Params, r0: f64, s: f64, grid: YGrid, w: F, wy: G) -> Result<Self>
    where
        F: Fn(f64) -> f64,
        G: Fn(f64) -> f64,
    {
        let wv = grid.nodes().iter().map(|&y| w(y)).collect();
        let wyv = grid.nodes().iter().map(|&y| wy(y)).collect();
        let n = grid.len();
        Self::new(params, r0, s, grid, wv, vec![0.0; n], wyv)
    }

    /// Same frame with the fields replaced, e.g. by a difference with a model.
    pub fn with_fields(&self, w: Vec<f64>, ws: Vec<f64>, wy: Vec<f64>) -> Result<Self> {
        Self::new(self.params, self.r0, self.s, self.grid.clone(), w, ws, wy)
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn grid(&self) -> &YGrid {
        &self.grid
    }

    pub fn y(&self) -> &[f64] {
        self.grid.nodes()
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn ws(&self) -> &[f64] {
        &self.ws
    }

    pub fn wy(&self) -> &[f64] {
        &self.wy
    }

    /// `ρ` sampled on the grid.
    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    /// `∫ f ρ dy` with the grid's quadrature rule.
    pub fn weighted_integral(&self, f: impl Fn(usize) -> f64) -> f64 {
        let q = self.grid.weights();
        (0..self.grid.len()).map(|j| q[j] * self.rho[j] * f(j)).sum()
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }
}
