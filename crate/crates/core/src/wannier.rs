//! Wannier states `|W^n_M> = N^{-1/2} sum_l e^{-i k_l M a} |psi_{n k_l}>` and the
//! rank-one projector built from them.
//!
//! The shape of `W` depends on the Bloch phase convention; the record of which
//! gauge each sector carried is kept alongside the state.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::bloch::{BandStructure, Gauge};
use crate::error::{Error, Result};
use crate::grid::WaveFunction;
use crate::operator::OperatorMatrix;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaugeRecord {
    pub convention: &'static str,
    /// Gauge of the Bloch state used from each sector `l`.
    pub sectors: Vec<Gauge>,
}

impl GaugeRecord {
    pub fn all_fixed(&self) -> bool {
        self.sectors.iter().all(|g| matches!(g, Gauge::Fixed { .. }))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WannierState {
    pub band: usize,
    pub site: usize,
    pub wavefunction: WaveFunction,
    pub source_gauge: GaugeRecord,
}

impl WannierState {
    /// Probability mass `sum_{j in cell c} h |W_j|^2` for each cell.
    pub fn cell_probabilities(&self) -> Vec<f64> {
        let grid = self.wavefunction.grid();
        let h = grid.spacing();
        let mut out = vec![0.0; grid.n_cells()];
        for (j, z) in self.wavefunction.samples().iter().enumerate() {
            out[grid.cell_of(j)] += h * z.norm_sqr();
        }
        out
    }

    /// `(x_j, |W(x_j)|^2)` pairs.
    pub fn density_profile(&self) -> Vec<(f64, f64)> {
        let grid = self.wavefunction.grid();
        self.wavefunction
            .samples()
            .iter()
            .enumerate()
            .map(|(j, z)| (grid.x(j), z.norm_sqr()))
            .collect()
    }
}

/// Builds `W^n_M`, requiring every sector state of band `n` to be gauge-fixed.
pub fn build_wannier(bands: &BandStructure, band: usize, site: usize) -> Result<WannierState> {
    for s in bands.band(band) {
        if !matches!(s.gauge, Gauge::Fixed { .. }) {
            return Err(Error::UnfixedGauge {
                band,
                l: s.wavevector_index,
            });
        }
    }
    build_wannier_any_gauge(bands, band, site)
}

/// Builds `W^n_M` from whatever phases the Bloch states currently carry.
pub fn build_wannier_any_gauge(
    bands: &BandStructure,
    band: usize,
    site: usize,
) -> Result<WannierState> {
    let grid = *bands.grid();
    let n_cells = grid.n_cells();
    if site >= n_cells {
        return Err(Error::InvalidSite { site, n_cells });
    }
    let norm = (n_cells as f64).sqrt().recip();
    let mut acc = vec![Complex64::new(0.0, 0.0); grid.total_points()];
    let mut sectors = Vec::with_capacity(n_cells);
    for l in 0..n_cells {
        let state = bands.state(band, l)?;
        sectors.push(state.gauge);
        // k_l M a = 2 pi l M / N
        let phase = -2.0 * PI * ((l * site) % n_cells) as f64 / n_cells as f64;
        let coeff = Complex64::from_polar(norm, phase);
        for (a, z) in acc.iter_mut().zip(state.wavefunction.samples()) {
            *a += coeff * z;
        }
    }
    Ok(WannierState {
        band,
        site,
        wavefunction: WaveFunction::from_samples(grid, acc)?,
        source_gauge: GaugeRecord {
            convention: "u(x*) real positive at lowest-index max |u|",
            sectors,
        },
    })
}

/// `O = |W><W|`, entries `h W_i conj(W_j)`.
pub fn wannier_projector(w: &WannierState) -> OperatorMatrix {
    OperatorMatrix::outer(&w.wavefunction)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::solve_bands;
    use crate::grid::RingGrid;
    use crate::lattice::PotentialSpec;

    fn bands() -> BandStructure {
        let g = RingGrid::new(6, 1.0, 16).unwrap();
        solve_bands(g, &PotentialSpec::cosine(2.0), 1.0, 2).unwrap()
    }

    #[test]
    fn rejects_bad_site_and_band() {
        let b = bands();
        assert_eq!(
            build_wannier(&b, 0, 6).unwrap_err(),
            Error::InvalidSite { site: 6, n_cells: 6 }
        );
        assert!(matches!(
            build_wannier(&b, 2, 0).unwrap_err(),
            Error::MissingState { band: 2, .. }
        ));
    }

    #[test]
    fn strict_builder_requires_fixed_gauge() {
        let b = bands().regauged(|_, l| 0.1 * l as f64);
        assert!(matches!(
            build_wannier(&b, 0, 0),
            Err(Error::UnfixedGauge { band: 0, .. })
        ));
        let w = build_wannier_any_gauge(&b, 0, 0).unwrap();
        assert!(!w.source_gauge.all_fixed());
    }

    #[test]
    fn cell_probabilities_sum_to_one() {
        let b = bands();
        let w = build_wannier(&b, 1, 2).unwrap();
        let total: f64 = w.cell_probabilities().iter().sum();
        assert!((total - 1.0).abs() < 1e-10);
        assert!(w.source_gauge.all_fixed());
    }
}
