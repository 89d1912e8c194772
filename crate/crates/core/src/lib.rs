//! Numerical laboratory for Bloch states on a periodic ring.
//!
//! The crate assembles plane-wave Hamiltonians for cell-periodic potentials,
//! solves Bloch bands sector by sector, builds Wannier states and their
//! projectors, materializes local observables from harmonic-derivative
//! series, and measures kernel locality, crystal-momentum selection rules,
//! winding numbers and short-time transition amplitudes.

pub mod bloch;
pub mod cli;
pub mod derivative;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod lattice;
pub mod observable;
pub mod operator;
pub mod superselection;
pub mod wannier;

pub use bloch::{
    classify_by_translation, fix_gauge, solve_bands, solve_sector, BandStructure, BlochState,
    Gauge,
};
pub use derivative::DerivativeScheme;
pub use dynamics::PropagationExperiment;
pub use error::{Error, Result};
pub use grid::{inner_product, translate_by_cells, RingGrid, WaveFunction};
pub use lattice::{build_hamiltonian, build_translation, Harmonic, PotentialSpec};
pub use observable::{
    cell_periodicity_defect, locality_report, materialize, LocalObservableSeries, LocalityReport,
    SeriesTerm,
};
pub use operator::{apply_kernel, OperatorMatrix};
pub use superselection::{
    matrix_element, selection_scan, winding_number, winding_preservation_probe, SelectionScan,
    WindingResult,
};
pub use wannier::{build_wannier, wannier_projector, WannierState};
