//! Short-time transition amplitudes `<y| exp(-i eps H_m / hbar) |z>` with
//! `H_m = H + R`.
//!
//! Discrete position states are `h^{-1/2}` times unit sample vectors, so
//! `<y|z> = delta_yz / h` and kernels are `entries / h`. The propagator is
//! evaluated from one eigendecomposition of `H_m` shared by every `eps`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::derivative::DerivativeScheme;
use crate::error::{Error, Result};
use crate::grid::RingGrid;
use crate::lattice::{build_hamiltonian_with_scheme, PotentialSpec};
use crate::operator::{hermitian_eigen, OperatorMatrix};

pub const HERMITICITY_TOLERANCE: f64 = 1e-10;
/// Kinetic discretization used for propagation unless a caller overrides it.
pub const DEFAULT_KINETIC: DerivativeScheme = DerivativeScheme::FiniteDifference { order: 8 };

/// Hamiltonian with the banded kinetic term used by the propagation experiment.
pub fn banded_hamiltonian(
    grid: RingGrid,
    potential: &PotentialSpec,
    mass: f64,
) -> Result<OperatorMatrix> {
    build_hamiltonian_with_scheme(grid, potential, mass, DEFAULT_KINETIC)
}

#[derive(Debug, Clone)]
pub struct PropagationExperiment {
    grid: RingGrid,
    hamiltonian: OperatorMatrix,
    perturbation: OperatorMatrix,
    total: OperatorMatrix,
    pub epsilons: Vec<f64>,
    pub source: usize,
    pub target: usize,
    pub hbar: f64,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub epsilon: f64,
    pub exact: [f64; 2],
    pub exact_modulus: f64,
    pub first_order: [f64; 2],
    pub first_order_modulus: f64,
    /// `|exact - first_order|`.
    pub deviation: f64,
    pub unitarity_defect: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearResponse {
    /// Least-squares slope of `|amplitude|` against `eps`.
    pub slope: f64,
    pub intercept: f64,
    /// `|r(y, z)| / hbar` for the full `H_m` kernel.
    pub target: f64,
    pub relative_error: f64,
}

impl PropagationExperiment {
    pub fn new(
        hamiltonian: OperatorMatrix,
        perturbation: OperatorMatrix,
        epsilons: Vec<f64>,
        source: usize,
        target: usize,
        hbar: f64,
    ) -> Result<Self> {
        let grid = *hamiltonian.grid();
        let total = hamiltonian.add(&perturbation)?;
        let defect = total.hermiticity_defect();
        if defect > HERMITICITY_TOLERANCE {
            return Err(Error::NotHermitian(defect));
        }
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::InvalidExperiment(format!("hbar = {hbar} must be positive")));
        }
        if epsilons.is_empty() {
            return Err(Error::InvalidExperiment("epsilon list is empty".into()));
        }
        if let Some(e) = epsilons.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return Err(Error::InvalidExperiment(format!("epsilon {e} is not a positive number")));
        }
        for index in [source, target] {
            if index >= grid.total_points() {
                return Err(Error::IndexOutOfRange {
                    index,
                    total: grid.total_points(),
                });
            }
        }
        let (eigenvalues, eigenvectors) = hermitian_eigen(total.entries())?;
        Ok(Self {
            grid,
            hamiltonian,
            perturbation,
            total,
            epsilons,
            source,
            target,
            hbar,
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn grid(&self) -> &RingGrid {
        &self.grid
    }

    pub fn hamiltonian(&self) -> &OperatorMatrix {
        &self.hamiltonian
    }

    pub fn perturbation(&self) -> &OperatorMatrix {
        &self.perturbation
    }

    pub fn total(&self) -> &OperatorMatrix {
        &self.total
    }

    pub fn ring_distance(&self) -> f64 {
        self.grid.ring_distance(self.source, self.target) as f64 * self.grid.spacing()
    }

    fn phases(&self, eps: f64) -> Vec<Complex64> {
        self.eigenvalues
            .iter()
            .map(|&lam| Complex64::from_polar(1.0, -eps * lam / self.hbar))
            .collect()
    }

    /// Row `y` of `U(eps)` as amplitudes `<y|U|z>` for every `z`.
    pub fn amplitude_row(&self, eps: f64, y: usize) -> Vec<Complex64> {
        let g = self.grid.total_points();
        let inv_h = self.grid.spacing().recip();
        if eps == 0.0 {
            return (0..g)
                .map(|z| Complex64::new(if z == y { inv_h } else { 0.0 }, 0.0))
                .collect();
        }
        let v = &self.eigenvectors;
        let weighted: Vec<Complex64> = self
            .phases(eps)
            .iter()
            .enumerate()
            .map(|(k, p)| v[(y, k)] * p)
            .collect();
        (0..g)
            .map(|z| {
                let s: Complex64 = weighted
                    .iter()
                    .enumerate()
                    .map(|(k, w)| w * v[(z, k)].conj())
                    .sum();
                s * inv_h
            })
            .collect()
    }

    pub fn exact_amplitude_between(&self, eps: f64, y: usize, z: usize) -> Complex64 {
        self.amplitude_row(eps, y)[z]
    }

    pub fn exact_amplitude(&self, eps: f64) -> Complex64 {
        self.exact_amplitude_between(eps, self.source, self.target)
    }

    /// `delta_yz / h - (i eps / hbar) r_m(y, z)`.
    pub fn first_order_amplitude(&self, eps: f64) -> Complex64 {
        let delta = if self.source == self.target {
            self.grid.spacing().recip()
        } else {
            0.0
        };
        Complex64::new(delta, 0.0)
            - Complex64::i() * (eps / self.hbar) * self.total.kernel(self.source, self.target)
    }

    /// Probability `h^2 |<y|U|z>|^2` of landing on each sample `z`.
    pub fn transport_profile(&self, eps: f64) -> Vec<f64> {
        let h2 = self.grid.spacing().powi(2);
        self.amplitude_row(eps, self.source)
            .iter()
            .map(|a| h2 * a.norm_sqr())
            .collect()
    }

    /// `|1 - sum_z h^2 |<y|U|z>|^2|` for the source row.
    pub fn unitarity_defect(&self, eps: f64) -> f64 {
        (1.0 - self.transport_profile(eps).iter().sum::<f64>()).abs()
    }

    pub fn sweep(&self) -> Vec<SweepPoint> {
        self.epsilons
            .iter()
            .map(|&eps| {
                let exact = self.exact_amplitude(eps);
                let first = self.first_order_amplitude(eps);
                SweepPoint {
                    epsilon: eps,
                    exact: [exact.re, exact.im],
                    exact_modulus: exact.norm(),
                    first_order: [first.re, first.im],
                    first_order_modulus: first.norm(),
                    deviation: (exact - first).norm(),
                    unitarity_defect: self.unitarity_defect(eps),
                }
            })
            .collect()
    }

    pub fn linear_response(&self) -> LinearResponse {
        let ys: Vec<f64> = self
            .epsilons
            .iter()
            .map(|&e| self.exact_amplitude(e).norm())
            .collect();
        let (slope, intercept) = linear_fit(&self.epsilons, &ys);
        let target = self.total.kernel(self.source, self.target).norm() / self.hbar;
        LinearResponse {
            slope,
            intercept,
            target,
            relative_error: (slope - target).abs() / target.max(f64::MIN_POSITIVE),
        }
    }

    /// Log-log slope of `|exact - first_order|` against `eps`.
    pub fn second_order_slope(&self) -> f64 {
        let (xs, ys): (Vec<f64>, Vec<f64>) = self
            .epsilons
            .iter()
            .map(|&e| {
                let d = (self.exact_amplitude(e) - self.first_order_amplitude(e)).norm();
                (e.ln(), d.ln())
            })
            .unzip();
        linear_fit(&xs, &ys).0
    }
}

/// Ordinary least squares `y = slope x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// `count` logarithmically spaced values from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}
