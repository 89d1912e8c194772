#![allow(dead_code)]

use bloch_lab::{solve_bands, BandStructure, PotentialSpec, RingGrid};

pub const MASS: f64 = 1.0;

/// N = 8, a = 1, P = 32 (G = 256).
pub fn reference_grid() -> RingGrid {
    RingGrid::new(8, 1.0, 32).unwrap()
}

/// V = 2 cos(2 pi x / a).
pub fn reference_potential() -> PotentialSpec {
    PotentialSpec::cosine(2.0)
}

/// Bands 0..3 of the reference configuration.
pub fn reference_bands() -> BandStructure {
    solve_bands(reference_grid(), &reference_potential(), MASS, 4).unwrap()
}

pub fn small_grid() -> RingGrid {
    RingGrid::new(4, 1.0, 8).unwrap()
}
