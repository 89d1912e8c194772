//! Cell-periodic potentials, the Hamiltonian `p^2/2mu + V(x)` and the
//! one-cell translation operator as dense position-basis matrices.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::derivative::{momentum_power, spectral_operator, DerivativeScheme};
use crate::error::{Error, Result};
use crate::grid::RingGrid;
use crate::operator::OperatorMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    /// Cell harmonic index, `>= 1`.
    pub h: u32,
    pub alpha: f64,
    pub beta: f64,
}

/// `V(x) = V0 + sum_h [alpha_h cos(2 pi h x / a) + beta_h sin(2 pi h x / a)]`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct PotentialSpec {
    pub constant_term: f64,
    pub harmonics: Vec<Harmonic>,
}

impl PotentialSpec {
    pub fn free() -> Self {
        Self::default()
    }

    pub fn constant(v0: f64) -> Self {
        Self {
            constant_term: v0,
            harmonics: Vec::new(),
        }
    }

    pub fn cosine(alpha: f64) -> Self {
        Self {
            constant_term: 0.0,
            harmonics: vec![Harmonic {
                h: 1,
                alpha,
                beta: 0.0,
            }],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.constant_term.is_finite() {
            return Err(Error::InvalidPotential(format!(
                "constant_term = {} is not finite",
                self.constant_term
            )));
        }
        let mut seen = BTreeSet::new();
        for hm in &self.harmonics {
            if hm.h == 0 {
                return Err(Error::InvalidPotential(
                    "harmonic index must be >= 1 (use constant_term for h = 0)".into(),
                ));
            }
            if !seen.insert(hm.h) {
                return Err(Error::InvalidPotential(format!(
                    "harmonic index {} appears twice",
                    hm.h
                )));
            }
            if !(hm.alpha.is_finite() && hm.beta.is_finite()) {
                return Err(Error::InvalidPotential(format!(
                    "harmonic {} has non-finite coefficients",
                    hm.h
                )));
            }
        }
        Ok(())
    }

    pub fn value(&self, x: f64, cell_length: f64) -> f64 {
        self.harmonics.iter().fold(self.constant_term, |acc, hm| {
            let theta = 2.0 * PI * hm.h as f64 * x / cell_length;
            acc + hm.alpha * theta.cos() + hm.beta * theta.sin()
        })
    }

    /// Value at grid sample `j`, with the phase reduced exactly modulo one cell.
    pub fn sample(&self, grid: &RingGrid, j: usize) -> f64 {
        let p = grid.points_per_cell();
        self.harmonics.iter().fold(self.constant_term, |acc, hm| {
            let r = (hm.h as usize * j) % p;
            let theta = 2.0 * PI * r as f64 / p as f64;
            acc + hm.alpha * theta.cos() + hm.beta * theta.sin()
        })
    }

    /// Fourier coefficients over cell harmonics folded onto `P` slots, matching
    /// what the sampled potential sees on the grid: entry `d` multiplies
    /// `e^{i 2 pi d x / a}`.
    pub(crate) fn folded_coefficients(&self, points_per_cell: usize) -> Vec<Complex64> {
        let p = points_per_cell;
        let mut c = vec![Complex64::new(0.0, 0.0); p];
        c[0] += self.constant_term;
        for hm in &self.harmonics {
            let plus = hm.h as usize % p;
            let minus = (p - plus) % p;
            // cos = (e^+ + e^-)/2, sin = (e^+ - e^-)/(2i)
            c[plus] += Complex64::new(0.5 * hm.alpha, -0.5 * hm.beta);
            c[minus] += Complex64::new(0.5 * hm.alpha, 0.5 * hm.beta);
        }
        c
    }
}

pub fn potential_operator(grid: RingGrid, potential: &PotentialSpec) -> Result<OperatorMatrix> {
    potential.validate()?;
    let g = grid.total_points();
    let mut entries = DMatrix::zeros(g, g);
    for j in 0..g {
        entries[(j, j)] = Complex64::new(potential.sample(&grid, j), 0.0);
    }
    Ok(OperatorMatrix::from_parts(grid, entries))
}

/// Spectral Hamiltonian: the kinetic term is diagonal `k_q^2 / 2 mu` in the
/// discrete Fourier basis, `q in {-G/2, ..., G/2 - 1}`.
pub fn build_hamiltonian(
    grid: RingGrid,
    potential: &PotentialSpec,
    mass: f64,
) -> Result<OperatorMatrix> {
    build_hamiltonian_with_scheme(grid, potential, mass, DerivativeScheme::Spectral)
}

pub fn build_hamiltonian_with_scheme(
    grid: RingGrid,
    potential: &PotentialSpec,
    mass: f64,
    scheme: DerivativeScheme,
) -> Result<OperatorMatrix> {
    let kinetic = kinetic_operator(grid, mass, scheme)?;
    let h = kinetic.add(&potential_operator(grid, potential)?)?;
    Ok(h.hermitian_part())
}

pub fn kinetic_operator(
    grid: RingGrid,
    mass: f64,
    scheme: DerivativeScheme,
) -> Result<OperatorMatrix> {
    if !(mass.is_finite() && mass > 0.0) {
        return Err(Error::InvalidMass(mass));
    }
    let t = match scheme {
        DerivativeScheme::Spectral => {
            spectral_operator(grid, |q| grid.ring_wavenumber(q).powi(2) / (2.0 * mass))
        }
        fd => momentum_power(grid, 2, fd)?.scale(Complex64::new(0.5 / mass, 0.0)),
    };
    Ok(t)
}

/// Permutation matrix for one-cell translation, `(T psi)(x) = psi(x - a)`.
pub fn build_translation(grid: RingGrid) -> OperatorMatrix {
    translation_power(grid, 1)
}

pub fn translation_power(grid: RingGrid, cells: i64) -> OperatorMatrix {
    let g = grid.total_points();
    let shift = cells * grid.points_per_cell() as i64;
    let mut entries = DMatrix::zeros(g, g);
    for i in 0..g {
        entries[(i, grid.wrap_index(i as i64 - shift))] = Complex64::new(1.0, 0.0);
    }
    OperatorMatrix::from_parts(grid, entries)
}
