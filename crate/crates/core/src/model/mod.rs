//! Mathematical kernels: parameters, weight, solitons, y-grids, frames and functionals.

mod frame;
pub mod functionals;
mod grid;
mod params;
pub mod soliton;

pub use frame::SimilarityFrame;
pub use functionals::{
    boundedness_integral, corrected_energy, dissipation, energy, h_distance, h_norm, hardy_sobolev_ratio,
    lyapunov_from_f, lyapunov_functional, stationary_residual,
};
pub use grid::{QuadratureKind, YGrid, DEFAULT_ETA};
pub use params::Params;
pub use soliton::{kappa, kappa_dy, kappa_star, rho_weight, SolitonParams};
