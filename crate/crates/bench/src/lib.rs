//! Fixtures shared by the benchmarks.

use blowup_core::model::{YGrid, DEFAULT_ETA};
use blowup_core::solitons::soliton_frame;
use blowup_core::solver::{InitialData, Scenario};
use blowup_core::{Params, SimilarityFrame, SolitonParams};

pub fn cubic() -> Params {
    Params::new(3.0, 3).unwrap()
}

/// Centred bump that blows up near `r = 1.5`.
pub fn bump_scenario(nodes: usize) -> Scenario {
    Scenario::new(cubic(), 3.0, nodes, InitialData::Bump { center: 1.5, width: 0.6, amplitude: 6.0, velocity: 0.0 })
}

/// Alternating sum of solitons with the given hyperbolic angles.
pub fn soliton_sum(zeta: &[f64], y_nodes: usize) -> SimilarityFrame {
    let sols: Vec<SolitonParams> = zeta
        .iter()
        .enumerate()
        .map(|(i, &z)| SolitonParams::new(if i % 2 == 0 { 1.0 } else { -1.0 }, -z.tanh(), 0.0).unwrap())
        .collect();
    soliton_frame(cubic(), 1.0, 2.0, YGrid::uniform(y_nodes, DEFAULT_ETA).unwrap(), &sols).unwrap()
}
