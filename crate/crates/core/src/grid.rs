//! Uniform discretization of the ring `[0, L)` and wavefunctions sampled on it.
//!
//! Every cell holds the same number of samples, so a translation by one
//! lattice constant is an exact index permutation. Inner products use the
//! periodic Riemann sum `h * sum(conj(bra) * ket)`.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MIN_POINTS_PER_CELL: usize = 8;
pub const MIN_CELLS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingGrid {
    n_cells: usize,
    cell_length: f64,
    points_per_cell: usize,
}

impl RingGrid {
    pub fn new(n_cells: usize, cell_length: f64, points_per_cell: usize) -> Result<Self> {
        if n_cells < MIN_CELLS {
            return Err(Error::InvalidGrid(format!(
                "n_cells = {n_cells}, need at least {MIN_CELLS}"
            )));
        }
        if points_per_cell < MIN_POINTS_PER_CELL {
            return Err(Error::InvalidGrid(format!(
                "points_per_cell = {points_per_cell}, need at least {MIN_POINTS_PER_CELL}"
            )));
        }
        if !(cell_length.is_finite() && cell_length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "cell_length = {cell_length}, must be a positive finite number"
            )));
        }
        Ok(Self {
            n_cells,
            cell_length,
            points_per_cell,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn cell_length(&self) -> f64 {
        self.cell_length
    }

    pub fn points_per_cell(&self) -> usize {
        self.points_per_cell
    }

    /// `G = N * P`
    pub fn total_points(&self) -> usize {
        self.n_cells * self.points_per_cell
    }

    /// `L = N * a`
    pub fn ring_length(&self) -> f64 {
        self.n_cells as f64 * self.cell_length
    }

    /// `h = L / G`
    pub fn spacing(&self) -> f64 {
        self.ring_length() / self.total_points() as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.spacing()
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.total_points()).map(|j| self.x(j)).collect()
    }

    /// Ring wavenumber `2 pi q / L` for any integer `q`.
    pub fn ring_wavenumber(&self, q: i64) -> f64 {
        2.0 * PI * q as f64 / self.ring_length()
    }

    /// Crystal momentum `k_l = 2 pi l / L`.
    pub fn wavevector(&self, l: usize) -> f64 {
        self.ring_wavenumber(l as i64)
    }

    /// Relabels `l in {0..N-1}` into the symmetric window `(-N/2, N/2]`.
    pub fn symmetric_sector(&self, l: usize) -> i64 {
        let n = self.n_cells as i64;
        let l = (l as i64).rem_euclid(n);
        if 2 * l > n {
            l - n
        } else {
            l
        }
    }

    pub fn wrap_index(&self, j: i64) -> usize {
        j.rem_euclid(self.total_points() as i64) as usize
    }

    /// Shortest distance between two samples on the ring, in samples.
    pub fn ring_distance(&self, i: usize, j: usize) -> usize {
        let g = self.total_points();
        let d = (i as i64 - j as i64).rem_euclid(g as i64) as usize;
        d.min(g - d)
    }

    /// Index of the middle sample of `cell`.
    pub fn cell_center_index(&self, cell: usize) -> usize {
        (cell % self.n_cells) * self.points_per_cell + self.points_per_cell / 2
    }

    pub fn cell_of(&self, j: usize) -> usize {
        (j % self.total_points()) / self.points_per_cell
    }
}

impl fmt::Display for RingGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "RingGrid(N={}, a={}, P={})",
            self.n_cells, self.cell_length, self.points_per_cell
        )
    }
}

pub(crate) fn ensure_same_grid(left: &RingGrid, right: &RingGrid) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(Error::GridMismatch {
            left: left.to_string(),
            right: right.to_string(),
        })
    }
}

/// Complex samples `psi(x_j)`, `x_j = j h`, with indices taken modulo `G`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    grid: RingGrid,
    samples: Vec<Complex64>,
}

impl WaveFunction {
    pub fn from_samples(grid: RingGrid, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.total_points() {
            return Err(Error::SampleCount {
                expected: grid.total_points(),
                got: samples.len(),
            });
        }
        if let Some(j) = samples.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite(j));
        }
        Ok(Self { grid, samples })
    }

    pub fn from_fn(grid: RingGrid, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let samples = (0..grid.total_points()).map(|j| f(grid.x(j))).collect();
        Self::from_samples(grid, samples)
    }

    /// Normalized ring harmonic `e^{i 2 pi q x / L} / sqrt(L)`.
    pub fn plane_wave(grid: RingGrid, q: i64) -> Self {
        let norm = grid.ring_length().sqrt().recip();
        let g = grid.total_points() as i64;
        let samples = (0..g)
            .map(|j| {
                // reduce q*j modulo G before forming the phase to keep it exact
                let phase = 2.0 * PI * (q * j).rem_euclid(g) as f64 / g as f64;
                Complex64::from_polar(norm, phase)
            })
            .collect();
        Self { grid, samples }
    }

    pub fn grid(&self) -> &RingGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn at(&self, j: i64) -> Complex64 {
        self.samples[self.grid.wrap_index(j)]
    }

    pub fn inner_product(&self, ket: &WaveFunction) -> Result<Complex64> {
        inner_product(self, ket)
    }

    pub fn norm(&self) -> f64 {
        let h = self.grid.spacing();
        (h * self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        self.scale(Complex64::new(n.recip(), 0.0))
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            grid: self.grid,
            samples: self.samples.iter().map(|z| z * factor).collect(),
        }
    }

    /// Pointwise product with `f(x_j)`.
    pub fn modulate(&self, f: impl Fn(f64) -> Complex64) -> Self {
        let samples = self
            .samples
            .iter()
            .enumerate()
            .map(|(j, z)| z * f(self.grid.x(j)))
            .collect();
        Self {
            grid: self.grid,
            samples,
        }
    }

    pub fn translate_by_cells(&self, cells: i64) -> Self {
        translate_by_cells(self, cells)
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Sup-norm distance to another wavefunction on the same grid.
    pub fn max_distance(&self, other: &WaveFunction) -> Result<f64> {
        ensure_same_grid(&self.grid, &other.grid)?;
        Ok(self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }
}

pub fn inner_product(bra: &WaveFunction, ket: &WaveFunction) -> Result<Complex64> {
    ensure_same_grid(&bra.grid, &ket.grid)?;
    let sum: Complex64 = bra
        .samples
        .iter()
        .zip(&ket.samples)
        .map(|(b, k)| b.conj() * k)
        .sum();
    Ok(sum * bra.grid.spacing())
}

/// Output sample `j` is input sample `(j - cells * P) mod G`, i.e.
/// `(T^c psi)(x) = psi(x - c a)`.
pub fn translate_by_cells(psi: &WaveFunction, cells: i64) -> WaveFunction {
    let grid = psi.grid;
    let shift = cells * grid.points_per_cell() as i64;
    let samples = (0..grid.total_points() as i64)
        .map(|j| psi.samples[grid.wrap_index(j - shift)])
        .collect();
    WaveFunction { grid, samples }
}
