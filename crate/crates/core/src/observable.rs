//! Local observables as finite harmonic-derivative series
//! `R = sum [c_mn cos(2 pi m x / L) + d_mn sin(2 pi m x / L)] (-i d/dx)^n`,
//! their materialization into kernels, and kernel locality diagnostics.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::ops::Add;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::derivative::{momentum_power, DerivativeScheme, MAX_DERIVATIVE_ORDER};
use crate::error::{Error, Result};
use crate::grid::RingGrid;
use crate::operator::OperatorMatrix;

pub use crate::operator::apply_kernel;

/// Default cumulative mass threshold defining the locality width.
pub const LOCALITY_MASS: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesTerm {
    /// Ring harmonic index.
    pub m: u32,
    /// Power of `-i d/dx`.
    pub n: u32,
    pub c: f64,
    pub d: f64,
}

impl SeriesTerm {
    pub fn new(m: u32, n: u32, c: f64, d: f64) -> Self {
        Self { m, n, c, d }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalObservableSeries {
    pub terms: Vec<SeriesTerm>,
    #[serde(default = "default_symmetrize")]
    pub symmetrize: bool,
}

fn default_symmetrize() -> bool {
    true
}

impl LocalObservableSeries {
    pub fn new(terms: Vec<SeriesTerm>) -> Self {
        Self {
            terms,
            symmetrize: true,
        }
    }

    pub fn single(m: u32, n: u32, c: f64, d: f64) -> Self {
        Self::new(vec![SeriesTerm::new(m, n, c, d)])
    }

    pub fn identity() -> Self {
        Self::single(0, 0, 1.0, 0.0)
    }

    /// `cos(2 pi m x / L)` as a multiplication operator.
    pub fn harmonic(m: u32) -> Self {
        Self::single(m, 0, 1.0, 0.0)
    }

    pub fn kinetic(mass: f64) -> Self {
        Self::single(0, 2, 0.5 / mass, 0.0)
    }

    pub fn raw(mut self) -> Self {
        self.symmetrize = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for t in &self.terms {
            if !(t.c.is_finite() && t.d.is_finite()) {
                return Err(Error::UnsupportedScheme(format!(
                    "term (m={}, n={}) has non-finite coefficients",
                    t.m, t.n
                )));
            }
            if t.n > MAX_DERIVATIVE_ORDER {
                return Err(Error::UnsupportedScheme(format!(
                    "derivative order {} exceeds {MAX_DERIVATIVE_ORDER}",
                    t.n
                )));
            }
        }
        Ok(())
    }
}

impl Add for LocalObservableSeries {
    type Output = LocalObservableSeries;

    fn add(mut self, rhs: Self) -> Self::Output {
        self.terms.extend(rhs.terms);
        self
    }
}

/// Builds `sum_terms diag(c cos + d sin) . D^n`; returns the Hermitian part when
/// `series.symmetrize` is set, the raw product otherwise.
pub fn materialize(
    series: &LocalObservableSeries,
    grid: RingGrid,
    scheme: DerivativeScheme,
) -> Result<OperatorMatrix> {
    series.validate()?;
    scheme.validate()?;
    let g = grid.total_points();
    let mut powers: BTreeMap<u32, OperatorMatrix> = BTreeMap::new();
    let mut acc = OperatorMatrix::zeros(grid);
    for term in &series.terms {
        if let std::collections::btree_map::Entry::Vacant(slot) = powers.entry(term.n) {
            slot.insert(momentum_power(grid, term.n, scheme)?);
        }
        let d_n = powers[&term.n].entries();
        let profile: Vec<f64> = (0..g)
            .map(|j| {
                let r = (term.m as usize * j) % g;
                let theta = 2.0 * PI * r as f64 / g as f64;
                let sin_part = if term.m == 0 { 0.0 } else { term.d * theta.sin() };
                term.c * theta.cos() + sin_part
            })
            .collect();
        let mut scaled = d_n.clone();
        for (i, mut row) in scaled.row_iter_mut().enumerate() {
            row *= Complex64::new(profile[i], 0.0);
        }
        acc = OperatorMatrix::from_parts(grid, acc.into_entries() + scaled);
    }
    Ok(if series.symmetrize {
        acc.hermitian_part()
    } else {
        acc
    })
}

/// Fraction of squared Frobenius mass within each ring distance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalityReport {
    pub spacing: f64,
    /// `cumulative[d]` = mass fraction with ring distance `<= d` samples.
    pub cumulative: Vec<f64>,
}

impl LocalityReport {
    pub fn bandwidth_mass(&self, width: f64) -> f64 {
        if width < 0.0 {
            return 0.0;
        }
        let d = ((width / self.spacing) + 1e-9).floor() as usize;
        self.cumulative[d.min(self.cumulative.len() - 1)]
    }

    pub fn locality_width_at(&self, mass: f64) -> f64 {
        let d = self
            .cumulative
            .iter()
            .position(|&m| m >= mass)
            .unwrap_or(self.cumulative.len() - 1);
        d as f64 * self.spacing
    }

    /// Smallest width holding at least 99% of the mass.
    pub fn locality_width(&self) -> f64 {
        self.locality_width_at(LOCALITY_MASS)
    }

    pub fn is_local_at(&self, width: f64, threshold: f64) -> bool {
        self.bandwidth_mass(width) >= threshold
    }

    /// `(w, mass(w))` rows for every representable width.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.cumulative
            .iter()
            .enumerate()
            .map(|(d, &m)| (d as f64 * self.spacing, m))
    }
}

pub fn locality_report(a: &OperatorMatrix) -> LocalityReport {
    let grid = *a.grid();
    let g = grid.total_points();
    let mut by_distance = vec![0.0; g / 2 + 1];
    for j in 0..g {
        for i in 0..g {
            by_distance[grid.ring_distance(i, j)] += a.entries()[(i, j)].norm_sqr();
        }
    }
    let total: f64 = by_distance.iter().sum();
    let mut cumulative = Vec::with_capacity(by_distance.len());
    let mut running = 0.0;
    for m in by_distance {
        running += m;
        cumulative.push(if total > 0.0 { (running / total).min(1.0) } else { 1.0 });
    }
    if let Some(last) = cumulative.last_mut() {
        *last = 1.0;
    }
    LocalityReport {
        spacing: grid.spacing(),
        cumulative,
    }
}

/// `||A - T A T^dagger||_F / max(||A||_F, 1e-300)`.
pub fn cell_periodicity_defect(a: &OperatorMatrix, t: &OperatorMatrix) -> Result<f64> {
    let conj = t.compose(a)?.compose(&t.adjoint())?;
    let diff = a.sub(&conj)?.frobenius_norm();
    Ok(diff / a.frobenius_norm().max(1e-300))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> RingGrid {
        RingGrid::new(4, 1.0, 8).unwrap()
    }

    #[test]
    fn identity_term() {
        let g = grid();
        let a = materialize(&LocalObservableSeries::identity(), g, DerivativeScheme::Spectral).unwrap();
        assert!(a.max_distance(&OperatorMatrix::identity(g)).unwrap() <= 1e-12);
    }

    #[test]
    fn sine_ignored_for_zero_harmonic() {
        let g = grid();
        let a = materialize(&LocalObservableSeries::single(0, 0, 1.0, 5.0), g, DerivativeScheme::Spectral).unwrap();
        assert!(a.max_distance(&OperatorMatrix::identity(g)).unwrap() <= 1e-12);
    }

    #[test]
    fn rejects_invalid_series() {
        let g = grid();
        let bad = LocalObservableSeries::single(0, 9, 1.0, 0.0);
        assert!(materialize(&bad, g, DerivativeScheme::Spectral).is_err());
        let nan = LocalObservableSeries::single(1, 0, f64::NAN, 0.0);
        assert!(materialize(&nan, g, DerivativeScheme::Spectral).is_err());
        let k = LocalObservableSeries::kinetic(1.0);
        assert!(materialize(&k, g, DerivativeScheme::FiniteDifference { order: 5 }).is_err());
    }

    #[test]
    fn raw_product_is_not_hermitian() {
        let g = grid();
        let s = LocalObservableSeries::single(1, 1, 1.0, 0.0);
        let raw = materialize(&s.clone().raw(), g, DerivativeScheme::Spectral).unwrap();
        let sym = materialize(&s, g, DerivativeScheme::Spectral).unwrap();
        assert!(raw.hermiticity_defect() > 1e-3);
        assert!(sym.hermiticity_defect() <= 1e-12);
    }

    #[test]
    fn diagonal_operator_has_zero_width() {
        let g = grid();
        let v = OperatorMatrix::diagonal(g, |x| Complex64::new(1.0 + x.sin(), 0.0));
        let r = locality_report(&v);
        assert_eq!(r.locality_width(), 0.0);
        assert_eq!(r.bandwidth_mass(0.0), 1.0);
        assert!(r.is_local_at(0.0, 0.999));
    }

    #[test]
    fn mass_profile_is_monotone_and_complete() {
        let g = grid();
        let a = materialize(&LocalObservableSeries::kinetic(1.0), g, DerivativeScheme::Spectral).unwrap();
        let r = locality_report(&a);
        assert!(r.cumulative.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(r.bandwidth_mass(g.ring_length() / 2.0), 1.0);
        assert_eq!(r.bandwidth_mass(-1.0), 0.0);
    }
}
