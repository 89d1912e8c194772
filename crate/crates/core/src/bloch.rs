//! Bloch eigenstates `psi_{n k_l}(x) = u_{n k_l}(x) e^{i k_l x}`, solved sector
//! by sector in the reduced plane-wave basis, plus a brute-force classifier
//! that diagonalizes the full Hamiltonian and sorts states by their
//! translation eigenvalue.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{inner_product, translate_by_cells, RingGrid, WaveFunction};
use crate::lattice::PotentialSpec;
use crate::operator::{hermitian_eigen, OperatorMatrix};

/// Relative band within which `|u|` samples count as tied for the gauge anchor.
const GAUGE_TIE_TOLERANCE: f64 = 1e-9;
const GAUGE_MIN_AMPLITUDE: f64 = 1e-12;
/// Energy clusters split where the gap exceeds this fraction of the spectral range.
pub const DEGENERACY_GAP: f64 = 1e-9;
pub const COMMUTATOR_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Gauge {
    /// `u(x*)` real and positive at the anchor sample `x*` maximizing `|u|`.
    Fixed { anchor: usize },
    /// Phase left as produced (eigensolver output or explicit regauging).
    Arbitrary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlochState {
    pub band: usize,
    pub wavevector_index: usize,
    pub energy: f64,
    pub wavefunction: WaveFunction,
    pub cell_part: WaveFunction,
    pub gauge: Gauge,
}

impl BlochState {
    /// Builds a state from sampled `psi`, deriving `u = psi e^{-i k_l x}`.
    pub fn from_wavefunction(band: usize, l: usize, energy: f64, psi: WaveFunction) -> Self {
        let grid = *psi.grid();
        let g = grid.total_points() as i64;
        let samples = psi
            .samples()
            .iter()
            .enumerate()
            .map(|(j, z)| {
                let phase = -2.0 * PI * ((l as i64) * j as i64).rem_euclid(g) as f64 / g as f64;
                z * Complex64::from_polar(1.0, phase)
            })
            .collect();
        let cell_part = WaveFunction::from_samples(grid, samples)
            .expect("finite samples stay finite under a unimodular factor");
        Self {
            band,
            wavevector_index: l,
            energy,
            wavefunction: psi,
            cell_part,
            gauge: Gauge::Arbitrary,
        }
    }

    pub fn grid(&self) -> &RingGrid {
        self.wavefunction.grid()
    }

    pub fn wavevector(&self) -> f64 {
        self.grid().wavevector(self.wavevector_index)
    }

    /// Multiplies the state by a global phase; the result is no longer gauge-fixed.
    pub fn with_phase(&self, phase: f64) -> Self {
        let f = Complex64::from_polar(1.0, phase);
        Self {
            wavefunction: self.wavefunction.scale(f),
            cell_part: self.cell_part.scale(f),
            gauge: Gauge::Arbitrary,
            ..self.clone()
        }
    }

    /// `max_j |T psi - e^{-i k_l a} psi|`.
    pub fn translation_residual(&self) -> f64 {
        let k = self.wavevector();
        let a = self.grid().cell_length();
        let shifted = translate_by_cells(&self.wavefunction, 1);
        let expected = self.wavefunction.scale(Complex64::from_polar(1.0, -k * a));
        shifted.max_distance(&expected).unwrap_or(f64::INFINITY)
    }

    /// `max_j |u(x_j + a) - u(x_j)|`.
    pub fn cell_periodicity_residual(&self) -> f64 {
        let shifted = translate_by_cells(&self.cell_part, 1);
        shifted.max_distance(&self.cell_part).unwrap_or(f64::INFINITY)
    }

    pub fn norm_residual(&self) -> f64 {
        (self.wavefunction.norm() - 1.0).abs()
    }
}

/// Chooses the global phase so that `u(x*)` is real and positive, `x*` being
/// the lowest-index sample where `|u|` is maximal.
pub fn fix_gauge(state: &BlochState) -> Result<BlochState> {
    let u = state.cell_part.samples();
    let max = state.cell_part.max_abs();
    if max < GAUGE_MIN_AMPLITUDE {
        return Err(Error::DegenerateState(max));
    }
    let anchor = u
        .iter()
        .position(|z| z.norm() >= max * (1.0 - GAUGE_TIE_TOLERANCE))
        .expect("the maximum is attained");
    let phase = -u[anchor].arg();
    let mut fixed = state.with_phase(phase);
    fixed.gauge = Gauge::Fixed { anchor };
    Ok(fixed)
}

/// Lowest `band_count` Bloch states in sector `l`, from the `P x P` Hamiltonian
/// in the plane-wave basis `e^{i k_q x}` with `q = l (mod N)` inside the grid's
/// Fourier window.
pub fn solve_sector(
    grid: RingGrid,
    potential: &PotentialSpec,
    mass: f64,
    l: usize,
    band_count: usize,
) -> Result<Vec<BlochState>> {
    potential.validate()?;
    if !(mass.is_finite() && mass > 0.0) {
        return Err(Error::InvalidMass(mass));
    }
    let n_cells = grid.n_cells();
    let p = grid.points_per_cell();
    if l >= n_cells {
        return Err(Error::SectorOutOfRange { l, n_cells });
    }
    if band_count > p {
        return Err(Error::BandCount {
            requested: band_count,
            available: p,
        });
    }

    // the P wavenumbers q = l (mod N) inside the grid's Fourier window
    let n = n_cells as i64;
    let q_min = -(grid.total_points() as i64 / 2);
    let q0 = q_min + (l as i64 - q_min).rem_euclid(n);
    let modes: Vec<i64> = (0..p as i64).map(|a| q0 + n * a).collect();
    let folded = potential.folded_coefficients(p);
    let reduced = DMatrix::from_fn(p, p, |a, b| {
        let d = (a as i64 - b as i64).rem_euclid(p as i64) as usize;
        let mut v = folded[d];
        if a == b {
            v += grid.ring_wavenumber(modes[a]).powi(2) / (2.0 * mass);
        }
        v
    });
    let reduced = (&reduced + reduced.adjoint()) * Complex64::new(0.5, 0.0);
    let (energies, vectors) = hermitian_eigen(&reduced)?;

    let g = grid.total_points() as i64;
    let amplitude = grid.ring_length().sqrt().recip();
    (0..band_count)
        .map(|band| {
            let samples: Vec<Complex64> = (0..g)
                .map(|j| {
                    modes
                        .iter()
                        .enumerate()
                        .map(|(a, &q)| {
                            let phase = 2.0 * PI * (q * j).rem_euclid(g) as f64 / g as f64;
                            vectors[(a, band)] * Complex64::from_polar(amplitude, phase)
                        })
                        .sum()
                })
                .collect();
            let psi = WaveFunction::from_samples(grid, samples)?.normalized();
            fix_gauge(&BlochState::from_wavefunction(band, l, energies[band], psi))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandStructure {
    grid: RingGrid,
    band_count: usize,
    /// Row-major over `(band, sector)`.
    states: Vec<BlochState>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandChecks {
    pub orthonormality_residual: f64,
    pub translation_residual: f64,
    pub cell_periodicity_residual: f64,
    pub norm_residual: f64,
    pub energies_ordered: bool,
}

impl BandStructure {
    pub fn from_states(grid: RingGrid, band_count: usize, states: Vec<BlochState>) -> Result<Self> {
        let n = grid.n_cells();
        let mut slots: Vec<Option<BlochState>> = vec![None; band_count * n];
        for s in states {
            if s.band < band_count && s.wavevector_index < n {
                let idx = s.band * n + s.wavevector_index;
                slots[idx] = Some(s);
            }
        }
        let states = slots
            .into_iter()
            .enumerate()
            .map(|(idx, s)| {
                s.ok_or(Error::MissingState {
                    band: idx / n,
                    l: idx % n,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            grid,
            band_count,
            states,
        })
    }

    pub fn grid(&self) -> &RingGrid {
        &self.grid
    }

    pub fn band_count(&self) -> usize {
        self.band_count
    }

    pub fn n_sectors(&self) -> usize {
        self.grid.n_cells()
    }

    pub fn get(&self, band: usize, l: usize) -> Option<&BlochState> {
        if band < self.band_count && l < self.grid.n_cells() {
            Some(&self.states[band * self.grid.n_cells() + l])
        } else {
            None
        }
    }

    pub fn state(&self, band: usize, l: usize) -> Result<&BlochState> {
        self.get(band, l).ok_or(Error::MissingState { band, l })
    }

    pub fn states(&self) -> &[BlochState] {
        &self.states
    }

    pub fn band(&self, band: usize) -> impl Iterator<Item = &BlochState> {
        self.states
            .iter()
            .skip(band * self.grid.n_cells())
            .take(if band < self.band_count { self.grid.n_cells() } else { 0 })
    }

    /// Applies `psi_{n l} -> e^{i theta} psi_{n l}` with `theta = phase(n, l)`.
    pub fn regauged(&self, phase: impl Fn(usize, usize) -> f64) -> Self {
        let states = self
            .states
            .iter()
            .map(|s| s.with_phase(phase(s.band, s.wavevector_index)))
            .collect();
        Self {
            states,
            ..self.clone()
        }
    }

    /// Re-applies [`fix_gauge`] to every state.
    pub fn gauge_fixed(&self) -> Result<Self> {
        let states = self.states.iter().map(fix_gauge).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            states,
            ..self.clone()
        })
    }

    pub fn orthonormality_residual(&self) -> f64 {
        let s = &self.states;
        (0..s.len())
            .into_par_iter()
            .map(|i| {
                (i..s.len())
                    .map(|j| {
                        let ip = inner_product(&s[i].wavefunction, &s[j].wavefunction)
                            .unwrap_or(Complex64::new(f64::INFINITY, 0.0));
                        let target = if i == j { 1.0 } else { 0.0 };
                        (ip - target).norm()
                    })
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max)
    }

    pub fn checks(&self) -> BandChecks {
        let max_of = |f: fn(&BlochState) -> f64| self.states.iter().map(f).fold(0.0, f64::max);
        let energies_ordered = (0..self.n_sectors()).all(|l| {
            (1..self.band_count).all(|n| {
                self.states[(n - 1) * self.n_sectors() + l].energy
                    <= self.states[n * self.n_sectors() + l].energy
            })
        });
        BandChecks {
            orthonormality_residual: self.orthonormality_residual(),
            translation_residual: max_of(BlochState::translation_residual),
            cell_periodicity_residual: max_of(BlochState::cell_periodicity_residual),
            norm_residual: max_of(BlochState::norm_residual),
            energies_ordered,
        }
    }
}

/// Solves every sector (in parallel) and assembles the band structure.
pub fn solve_bands(
    grid: RingGrid,
    potential: &PotentialSpec,
    mass: f64,
    band_count: usize,
) -> Result<BandStructure> {
    let per_sector = (0..grid.n_cells())
        .into_par_iter()
        .map(|l| solve_sector(grid, potential, mass, l, band_count))
        .collect::<Result<Vec<_>>>()?;
    BandStructure::from_states(grid, band_count, per_sector.into_iter().flatten().collect())
}

/// Brute-force oracle: diagonalizes `H` on the full grid, then separates each
/// (near-)degenerate energy cluster into translation eigenspaces.
pub fn classify_by_translation(
    h: &OperatorMatrix,
    t: &OperatorMatrix,
    band_count: usize,
) -> Result<BandStructure> {
    let grid = *h.grid();
    let comm = h.commutator(t)?.frobenius_norm();
    if comm > COMMUTATOR_TOLERANCE {
        return Err(Error::NonCommuting(comm));
    }
    let n_cells = grid.n_cells();
    if band_count > grid.points_per_cell() {
        return Err(Error::BandCount {
            requested: band_count,
            available: grid.points_per_cell(),
        });
    }
    let (energies, vectors) = hermitian_eigen(h.entries())?;
    let g = energies.len();
    let range = energies[g - 1] - energies[0];
    let gap = DEGENERACY_GAP * range;

    let mut clusters: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    for i in 1..=g {
        if i == g || energies[i] - energies[i - 1] > gap {
            clusters.push((start, i));
            start = i;
        }
    }

    let mut by_sector: Vec<Vec<(f64, Vec<Complex64>)>> = vec![Vec::new(); n_cells];
    for (lo, hi) in clusters {
        let basis = vectors.columns(lo, hi - lo).into_owned();
        let t_sub = basis.adjoint() * t.entries() * &basis;
        let m = hi - lo;
        // sum_l l * P_l with P_l = (1/N) sum_c e^{i 2 pi l c / N} T^c
        let mut sector_label = DMatrix::<Complex64>::zeros(m, m);
        let mut power = DMatrix::<Complex64>::identity(m, m);
        for c in 0..n_cells {
            let weight: Complex64 = (0..n_cells)
                .map(|l| {
                    Complex64::from_polar(
                        l as f64 / n_cells as f64,
                        2.0 * PI * ((l * c) % n_cells) as f64 / n_cells as f64,
                    )
                })
                .sum();
            sector_label += &power * weight;
            power = &power * &t_sub;
        }
        let sector_label = (&sector_label + sector_label.adjoint()) * Complex64::new(0.5, 0.0);
        let (labels, local) = hermitian_eigen(&sector_label)?;
        let rotated = &basis * local;
        for (c, label) in labels.iter().enumerate() {
            let l = (label.round() as i64).rem_euclid(n_cells as i64) as usize;
            let v = rotated.column(c);
            let energy = (v.adjoint() * h.entries() * v)[(0, 0)].re;
            by_sector[l].push((energy, v.iter().copied().collect()));
        }
    }

    let inv_sqrt_h = grid.spacing().sqrt().recip();
    let mut states = Vec::with_capacity(band_count * n_cells);
    for (l, mut entries) in by_sector.into_iter().enumerate() {
        if entries.len() < band_count {
            return Err(Error::BandCount {
                requested: band_count,
                available: entries.len(),
            });
        }
        entries.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (band, (energy, v)) in entries.into_iter().take(band_count).enumerate() {
            let psi = WaveFunction::from_samples(
                grid,
                v.into_iter().map(|z| z * inv_sqrt_h).collect(),
            )?;
            states.push(fix_gauge(&BlochState::from_wavefunction(band, l, energy, psi))?);
        }
    }
    BandStructure::from_states(grid, band_count, states)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> RingGrid {
        RingGrid::new(8, 1.0, 32).unwrap()
    }

    #[test]
    fn free_particle_sector_energies() {
        let g = grid();
        let s0 = solve_sector(g, &PotentialSpec::free(), 1.0, 0, 1).unwrap();
        assert!(s0[0].energy.abs() < 1e-12);
        let c = 1.0 / g.ring_length().sqrt();
        for z in s0[0].wavefunction.samples() {
            assert!((z - c).norm() < 1e-12);
        }
        let s1 = solve_sector(g, &PotentialSpec::free(), 1.0, 1, 1).unwrap();
        assert!((s1[0].energy - PI * PI / 32.0).abs() < 1e-12);
        assert!((s1[0].energy - 0.308425).abs() < 1e-6);
    }

    #[test]
    fn sector_argument_checks() {
        let g = grid();
        assert_eq!(
            solve_sector(g, &PotentialSpec::free(), 1.0, 8, 1).unwrap_err(),
            Error::SectorOutOfRange { l: 8, n_cells: 8 }
        );
        assert_eq!(
            solve_sector(g, &PotentialSpec::free(), 1.0, 0, 33).unwrap_err(),
            Error::BandCount { requested: 33, available: 32 }
        );
        assert!(solve_sector(g, &PotentialSpec::free(), -1.0, 0, 1).is_err());
    }

    #[test]
    fn gauge_fix_is_idempotent_and_removes_phase() {
        let g = grid();
        let states = solve_sector(g, &PotentialSpec::cosine(2.0), 1.0, 3, 3).unwrap();
        for s in &states {
            let again = fix_gauge(s).unwrap();
            assert!(again.wavefunction.max_distance(&s.wavefunction).unwrap() <= 1e-12);
            let rotated = s.with_phase(PI / 3.0);
            let back = fix_gauge(&rotated).unwrap();
            assert!(back.wavefunction.max_distance(&s.wavefunction).unwrap() <= 1e-10);
            assert_eq!(back.gauge, s.gauge);
        }
    }

    #[test]
    fn gauge_fix_rejects_vanishing_state() {
        let g = RingGrid::new(2, 1.0, 8).unwrap();
        let zero = WaveFunction::from_samples(g, vec![Complex64::new(0.0, 0.0); 16]).unwrap();
        let s = BlochState::from_wavefunction(0, 0, 0.0, zero);
        assert!(matches!(fix_gauge(&s), Err(Error::DegenerateState(_))));
    }

    #[test]
    fn free_ground_state_gauge_is_positive_constant() {
        let g = grid();
        let s = &solve_sector(g, &PotentialSpec::free(), 1.0, 0, 1).unwrap()[0];
        let c = 1.0 / g.ring_length().sqrt();
        for z in s.wavefunction.samples() {
            assert!((z - Complex64::new(c, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn missing_state_is_reported() {
        let g = RingGrid::new(2, 1.0, 8).unwrap();
        let s = solve_sector(g, &PotentialSpec::free(), 1.0, 0, 1).unwrap();
        assert_eq!(
            BandStructure::from_states(g, 1, s).unwrap_err(),
            Error::MissingState { band: 0, l: 1 }
        );
    }
}
