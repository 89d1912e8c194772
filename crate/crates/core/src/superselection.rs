//! Matrix-element scans over the Bloch basis, crystal-momentum selection rules,
//! and winding numbers of wavefunctions traced around the ring.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::bloch::{BandStructure, BlochState};
use crate::derivative::DerivativeScheme;
use crate::error::Result;
use crate::grid::{inner_product, translate_by_cells, WaveFunction};
use crate::lattice::build_translation;
use crate::observable::{cell_periodicity_defect, materialize, LocalObservableSeries};
use crate::operator::{apply_kernel, OperatorMatrix};

/// Entries with modulus at or below this count as zero.
pub const ZERO_FLOOR: f64 = 1e-10;
/// Operators with a smaller cell-periodicity defect are treated as cell-periodic.
pub const PERIODIC_DEFECT: f64 = 1e-10;
/// Off-sector bound enforced for cell-periodic operators.
pub const OFF_SECTOR_BOUND: f64 = 1e-8;
/// Phase steps at or above this fraction of pi make the winding undefined.
pub const MAX_STEP_FRACTION: f64 = 0.9;
pub const DEFAULT_ZERO_FRACTION: f64 = 1e-6;

/// `<bra| A |ket>`.
pub fn matrix_element(a: &OperatorMatrix, bra: &BlochState, ket: &BlochState) -> Result<Complex64> {
    inner_product(&bra.wavefunction, &apply_kernel(a, &ket.wavefunction)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanEntry {
    pub band: usize,
    pub l: usize,
    pub band2: usize,
    pub l2: usize,
    pub re: f64,
    pub im: f64,
    pub modulus: f64,
}

impl ScanEntry {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoremCheck {
    pub max_off_sector_modulus: f64,
    pub bound: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaBin {
    /// Entries above the zero floor.
    pub nonzero: usize,
    pub total: usize,
    pub max_modulus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionScan {
    pub operator_label: String,
    pub n_cells: usize,
    pub floor: f64,
    pub cell_periodicity_defect: f64,
    /// Present when the operator is cell-periodic.
    pub theorem_check: Option<TheoremCheck>,
    pub entries: Vec<ScanEntry>,
}

impl SelectionScan {
    pub fn entry(&self, band: usize, l: usize, band2: usize, l2: usize) -> Option<&ScanEntry> {
        self.entries
            .iter()
            .find(|e| e.band == band && e.l == l && e.band2 == band2 && e.l2 == l2)
    }

    /// Sector shift `l' - l` relabeled into `(-N/2, N/2]`.
    pub fn delta_l(&self, e: &ScanEntry) -> i64 {
        let n = self.n_cells as i64;
        let d = (e.l2 as i64 - e.l as i64).rem_euclid(n);
        if 2 * d > n {
            d - n
        } else {
            d
        }
    }

    pub fn max_off_sector_modulus(&self) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.l != e.l2)
            .map(|e| e.modulus)
            .fold(0.0, f64::max)
    }

    pub fn max_modulus_where(&self, keep: impl Fn(&ScanEntry) -> bool) -> f64 {
        self.entries
            .iter()
            .filter(|e| keep(e))
            .map(|e| e.modulus)
            .fold(0.0, f64::max)
    }

    pub fn hermitian_defect(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| {
                self.entry(e.band2, e.l2, e.band, e.l)
                    .map(|t| (e.value() - t.value().conj()).norm())
                    .unwrap_or(f64::INFINITY)
            })
            .fold(0.0, f64::max)
    }

    pub fn delta_l_histogram(&self) -> BTreeMap<i64, DeltaBin> {
        let mut bins: BTreeMap<i64, DeltaBin> = BTreeMap::new();
        for e in &self.entries {
            let bin = bins.entry(self.delta_l(e)).or_insert(DeltaBin {
                nonzero: 0,
                total: 0,
                max_modulus: 0.0,
            });
            bin.total += 1;
            if e.modulus > self.floor {
                bin.nonzero += 1;
            }
            bin.max_modulus = bin.max_modulus.max(e.modulus);
        }
        bins
    }

    /// Sector shifts with at least one entry above `threshold`.
    pub fn coupled_shifts(&self, threshold: f64) -> Vec<i64> {
        self.delta_l_histogram()
            .into_iter()
            .filter(|(_, b)| b.max_modulus > threshold)
            .map(|(d, _)| d)
            .collect()
    }
}

/// All pairwise `<psi_{n l}| A |psi_{n' l'}>` over the band structure.
pub fn selection_scan(label: &str, a: &OperatorMatrix, bands: &BandStructure) -> Result<SelectionScan> {
    let grid = *bands.grid();
    let defect = cell_periodicity_defect(a, &build_translation(grid))?;
    let states = bands.states();
    let images = states
        .par_iter()
        .map(|s| apply_kernel(a, &s.wavefunction))
        .collect::<Result<Vec<_>>>()?;
    let mut entries = Vec::with_capacity(states.len() * states.len());
    for bra in states {
        for (ket, image) in states.iter().zip(&images) {
            let v = inner_product(&bra.wavefunction, image)?;
            entries.push(ScanEntry {
                band: bra.band,
                l: bra.wavevector_index,
                band2: ket.band,
                l2: ket.wavevector_index,
                re: v.re,
                im: v.im,
                modulus: v.norm(),
            });
        }
    }
    let mut scan = SelectionScan {
        operator_label: label.to_string(),
        n_cells: grid.n_cells(),
        floor: ZERO_FLOOR,
        cell_periodicity_defect: defect,
        theorem_check: None,
        entries,
    };
    if defect <= PERIODIC_DEFECT {
        let max_off = scan.max_off_sector_modulus();
        scan.theorem_check = Some(TheoremCheck {
            max_off_sector_modulus: max_off,
            bound: OFF_SECTOR_BOUND,
            passed: max_off <= OFF_SECTOR_BOUND,
        });
    }
    Ok(scan)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindingResult {
    /// `None` when the curve passes too close to the origin or a phase step is too large.
    pub value: Option<i64>,
    pub min_modulus: f64,
    pub max_step: f64,
    /// `|sum / 2 pi - round(sum / 2 pi)|`.
    pub residual: f64,
    pub zero_threshold: f64,
}

pub fn winding_number(psi: &WaveFunction) -> WindingResult {
    winding_number_with_threshold(psi, DEFAULT_ZERO_FRACTION * psi.max_abs())
}

/// `(1/2 pi) sum_j arg(psi_{j+1} / psi_j)` with indices modulo `G`.
pub fn winding_number_with_threshold(psi: &WaveFunction, zero_threshold: f64) -> WindingResult {
    let s = psi.samples();
    let g = s.len();
    let min_modulus = s.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    let mut total = 0.0;
    let mut max_step: f64 = 0.0;
    for j in 0..g {
        let step = (s[(j + 1) % g] * s[j].conj()).arg();
        max_step = max_step.max(step.abs());
        total += step;
    }
    let turns = total / (2.0 * PI);
    let rounded = turns.round();
    let defined = min_modulus > zero_threshold && max_step < MAX_STEP_FRACTION * PI;
    WindingResult {
        value: defined.then_some(rounded as i64),
        min_modulus,
        max_step,
        residual: (turns - rounded).abs(),
        zero_threshold,
    }
}

/// Squared norm of the projection of `psi` onto each crystal-momentum sector,
/// using `P_l = (1/N) sum_c e^{i k_l c a} T^c`.
pub fn sector_norms(psi: &WaveFunction) -> Vec<f64> {
    let grid = *psi.grid();
    let n = grid.n_cells();
    let shifted: Vec<WaveFunction> = (0..n as i64).map(|c| translate_by_cells(psi, c)).collect();
    (0..n)
        .map(|l| {
            let mut acc = vec![Complex64::new(0.0, 0.0); grid.total_points()];
            for (c, t) in shifted.iter().enumerate() {
                let w = Complex64::from_polar(
                    1.0 / n as f64,
                    2.0 * PI * ((l * c) % n) as f64 / n as f64,
                );
                for (a, z) in acc.iter_mut().zip(t.samples()) {
                    *a += w * z;
                }
            }
            grid.spacing() * acc.iter().map(|z| z.norm_sqr()).sum::<f64>()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub band: usize,
    pub l: usize,
    pub winding: WindingResult,
    pub norm: f64,
    /// `||P_{l'} phi||^2` for each sector `l'`.
    pub sector_norms: Vec<f64>,
    /// `sector_norms` divided by `||phi||^2` (all zero when `phi = 0`).
    pub sector_weights: Vec<f64>,
}

/// Applies the materialized series (spectral derivatives) to `psi_{n l}` and
/// reports how the result is distributed over winding and sectors.
pub fn winding_preservation_probe(
    series: &LocalObservableSeries,
    bands: &BandStructure,
    band: usize,
    l: usize,
) -> Result<ProbeReport> {
    let a = materialize(series, *bands.grid(), DerivativeScheme::Spectral)?;
    probe_operator(&a, bands, band, l)
}

pub fn probe_operator(
    a: &OperatorMatrix,
    bands: &BandStructure,
    band: usize,
    l: usize,
) -> Result<ProbeReport> {
    let state = bands.state(band, l)?;
    let phi = apply_kernel(a, &state.wavefunction)?;
    let norm = phi.norm();
    let sector_norms = sector_norms(&phi);
    let total = norm * norm;
    let sector_weights = sector_norms
        .iter()
        .map(|s| if total > 0.0 { s / total } else { 0.0 })
        .collect();
    Ok(ProbeReport {
        band,
        l,
        winding: winding_number(&phi),
        norm,
        sector_norms,
        sector_weights,
    })
}
