//! Dense position-basis operators.
//!
//! `entries[(i, j)]` acts on sample vectors, `(A psi)_i = sum_j entries[(i, j)] psi_j`,
//! and the kernel is `r(x_i, x_j) = entries[(i, j)] / h`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{ensure_same_grid, RingGrid, WaveFunction};

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    grid: RingGrid,
    entries: DMatrix<Complex64>,
}

impl OperatorMatrix {
    pub fn new(grid: RingGrid, entries: DMatrix<Complex64>) -> Result<Self> {
        let g = grid.total_points();
        if entries.nrows() != g || entries.ncols() != g {
            return Err(Error::SampleCount {
                expected: g * g,
                got: entries.len(),
            });
        }
        if let Some(k) = entries
            .iter()
            .position(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(Error::NonFinite(k));
        }
        Ok(Self { grid, entries })
    }

    pub(crate) fn from_parts(grid: RingGrid, entries: DMatrix<Complex64>) -> Self {
        debug_assert_eq!(entries.nrows(), grid.total_points());
        Self { grid, entries }
    }

    pub fn identity(grid: RingGrid) -> Self {
        let g = grid.total_points();
        Self::from_parts(grid, DMatrix::identity(g, g))
    }

    pub fn zeros(grid: RingGrid) -> Self {
        let g = grid.total_points();
        Self::from_parts(grid, DMatrix::zeros(g, g))
    }

    /// Multiplication operator by `f(x_j)`.
    pub fn diagonal(grid: RingGrid, f: impl Fn(f64) -> Complex64) -> Self {
        let d = DVector::from_iterator(
            grid.total_points(),
            (0..grid.total_points()).map(|j| f(grid.x(j))),
        );
        Self::from_parts(grid, DMatrix::from_diagonal(&d))
    }

    /// Circulant matrix `entries[(i, j)] = column[(i - j) mod G]`.
    pub(crate) fn circulant(grid: RingGrid, column: &[Complex64]) -> Self {
        let g = grid.total_points();
        debug_assert_eq!(column.len(), g);
        let entries = DMatrix::from_fn(g, g, |i, j| column[(i + g - j) % g]);
        Self::from_parts(grid, entries)
    }

    /// `|psi><psi|` in the sample convention: `entries = h psi_i conj(psi_j)`.
    pub fn outer(psi: &WaveFunction) -> Self {
        let h = psi.grid().spacing();
        let s = psi.samples();
        let g = s.len();
        let entries = DMatrix::from_fn(g, g, |i, j| s[i] * s[j].conj() * h);
        Self::from_parts(*psi.grid(), entries)
    }

    pub fn grid(&self) -> &RingGrid {
        &self.grid
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<Complex64> {
        self.entries
    }

    /// Position-space kernel `r(x_i, x_j)`.
    pub fn kernel(&self, i: usize, j: usize) -> Complex64 {
        self.entries[(i, j)] / self.grid.spacing()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_parts(self.grid, self.entries.adjoint())
    }

    pub fn hermitian_part(&self) -> Self {
        let e = (&self.entries + self.entries.adjoint()) * Complex64::new(0.5, 0.0);
        Self::from_parts(self.grid, e)
    }

    /// `max |A - A^dagger|` over entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let g = self.entries.nrows();
        let mut worst: f64 = 0.0;
        for i in 0..g {
            for j in i..g {
                worst = worst.max((self.entries[(i, j)] - self.entries[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    pub fn add(&self, other: &OperatorMatrix) -> Result<Self> {
        ensure_same_grid(&self.grid, &other.grid)?;
        Ok(Self::from_parts(self.grid, &self.entries + &other.entries))
    }

    pub fn sub(&self, other: &OperatorMatrix) -> Result<Self> {
        ensure_same_grid(&self.grid, &other.grid)?;
        Ok(Self::from_parts(self.grid, &self.entries - &other.entries))
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self::from_parts(self.grid, &self.entries * factor)
    }

    pub fn compose(&self, other: &OperatorMatrix) -> Result<Self> {
        ensure_same_grid(&self.grid, &other.grid)?;
        Ok(Self::from_parts(self.grid, &self.entries * &other.entries))
    }

    pub fn commutator(&self, other: &OperatorMatrix) -> Result<Self> {
        ensure_same_grid(&self.grid, &other.grid)?;
        Ok(Self::from_parts(
            self.grid,
            &self.entries * &other.entries - &other.entries * &self.entries,
        ))
    }

    /// `max |A - B|` over entries.
    pub fn max_distance(&self, other: &OperatorMatrix) -> Result<f64> {
        ensure_same_grid(&self.grid, &other.grid)?;
        Ok(self
            .entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn apply(&self, chi: &WaveFunction) -> Result<WaveFunction> {
        apply_kernel(self, chi)
    }
}

/// `phi_i = sum_j entries[(i, j)] chi_j`, the discrete form of
/// `phi(y) = integral r(y, z) chi(z) dz`.
pub fn apply_kernel(a: &OperatorMatrix, chi: &WaveFunction) -> Result<WaveFunction> {
    ensure_same_grid(&a.grid, chi.grid())?;
    let v = DVector::from_column_slice(chi.samples());
    let out = &a.entries * v;
    WaveFunction::from_samples(a.grid, out.as_slice().to_vec())
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending and
/// eigenvectors as matching columns.
pub fn hermitian_eigen(m: &DMatrix<Complex64>) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
    let eig = nalgebra::linalg::SymmetricEigen::try_new(m.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::Eigensolver("symmetric QR iteration did not converge".into()))?;
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigensolver("non-finite eigenvalue".into()));
    }
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let n = m.nrows();
    let vectors = DMatrix::from_fn(n, order.len(), |i, c| eig.eigenvectors[(i, order[c])]);
    Ok((values, vectors))
}
