//! Numerical laboratory for finite-time blow-up of the radial semilinear wave
//! equation `u_tt = u_rr + (N-1)/r u_r + |u|^{p-1} u`.
//!
//! The crate is organised in layers:
//!
//! * [`model`]: weights, solitons, y-grids, similarity frames and the functionals `E`, `F`, `H`;
//! * [`solver`]: the radial finite-difference solver and blow-up curve reconstruction;
//! * [`similarity`]: similarity frames extracted from a solution history and Lyapunov traces;
//! * [`solitons`]: single and multi-soliton modulation fits;
//! * [`classifier`]: per-point verdicts and geometric laws of the blow-up set.

pub mod classifier;
pub mod error;
pub mod model;
pub mod numeric;
pub mod similarity;
pub mod solitons;
pub mod solver;

pub use error::{Error, Result};
pub use model::{Params, SimilarityFrame, SolitonParams, YGrid};
