//! Derivative matrices on the ring: spectral (Fourier) and central finite
//! differences. Both are circulant, so they commute with lattice translations.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::RingGrid;
use crate::operator::OperatorMatrix;

pub const MAX_DERIVATIVE_ORDER: u32 = 8;
pub const FD_ORDERS: [usize; 4] = [2, 4, 6, 8];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeScheme {
    Spectral,
    FiniteDifference { order: usize },
}

impl DerivativeScheme {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DerivativeScheme::Spectral => Ok(()),
            DerivativeScheme::FiniteDifference { order } if FD_ORDERS.contains(&order) => Ok(()),
            DerivativeScheme::FiniteDifference { order } => Err(Error::UnsupportedScheme(
                format!("finite-difference accuracy order {order}, expected one of {FD_ORDERS:?}"),
            )),
        }
    }
}

impl fmt::Display for DerivativeScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DerivativeScheme::Spectral => write!(f, "spectral"),
            DerivativeScheme::FiniteDifference { order } => write!(f, "fd{order}"),
        }
    }
}

/// Signed Fourier index for DFT slot `s`, in `{-G/2, ..., G/2 - 1}`.
pub(crate) fn signed_mode(s: usize, g: usize) -> i64 {
    let s = s as i64;
    let g = g as i64;
    if s >= g / 2 + g % 2 {
        s - g
    } else {
        s
    }
}

/// Circulant operator with Fourier symbol `symbol(q)` on `q in {-G/2, ..., G/2 - 1}`.
pub fn spectral_operator(grid: RingGrid, symbol: impl Fn(i64) -> f64) -> OperatorMatrix {
    let g = grid.total_points();
    let values: Vec<f64> = (0..g).map(|s| symbol(signed_mode(s, g))).collect();
    let column: Vec<Complex64> = (0..g)
        .map(|d| {
            let sum: Complex64 = (0..g)
                .map(|s| {
                    let q = signed_mode(s, g);
                    let phase = 2.0 * PI * (q * d as i64).rem_euclid(g as i64) as f64 / g as f64;
                    Complex64::from_polar(values[s], phase)
                })
                .sum();
            sum / g as f64
        })
        .collect();
    OperatorMatrix::circulant(grid, &column)
}

/// Fornberg's recursion: weights `w[k][j]` approximating the `k`-th derivative
/// at `z` from values at `nodes[j]`, for all `k <= max_order`.
pub fn fornberg_weights(z: f64, nodes: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; n]; max_order + 1];
    if n == 0 {
        return c;
    }
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - z;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Central stencil for `d^n/dx^n` with accuracy order `p` on unit spacing.
/// Returns `(half_width, weights)` with `weights[s + half_width]` for offset `s`.
pub fn central_stencil(derivative_order: u32, accuracy: usize) -> (usize, Vec<f64>) {
    let n = derivative_order as usize;
    let points = 2 * n.div_ceil(2) - 1 + accuracy;
    let half = (points - 1) / 2;
    let nodes: Vec<f64> = (0..points).map(|s| s as f64 - half as f64).collect();
    let mut weights = fornberg_weights(0.0, &nodes, n).swap_remove(n);
    // exact antisymmetry/symmetry of central weights
    for s in 0..half {
        let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
        let avg = 0.5 * (weights[s] * sign + weights[points - 1 - s]);
        weights[points - 1 - s] = avg;
        weights[s] = sign * avg;
    }
    if n % 2 == 1 {
        weights[half] = 0.0;
    }
    (half, weights)
}

/// Matrix of `(-i d/dx)^n` under the given scheme.
pub fn momentum_power(grid: RingGrid, n: u32, scheme: DerivativeScheme) -> Result<OperatorMatrix> {
    scheme.validate()?;
    if n > MAX_DERIVATIVE_ORDER {
        return Err(Error::UnsupportedScheme(format!(
            "derivative order {n} exceeds {MAX_DERIVATIVE_ORDER}"
        )));
    }
    if n == 0 {
        return Ok(OperatorMatrix::identity(grid));
    }
    match scheme {
        DerivativeScheme::Spectral => Ok(spectral_operator(grid, |q| {
            grid.ring_wavenumber(q).powi(n as i32)
        })),
        DerivativeScheme::FiniteDifference { order } => {
            let g = grid.total_points();
            let (half, weights) = central_stencil(n, order);
            let scale = (-Complex64::i()).powu(n) / grid.spacing().powi(n as i32);
            let mut column = vec![Complex64::new(0.0, 0.0); g];
            for (idx, w) in weights.iter().enumerate() {
                let s = idx as i64 - half as i64;
                // (A psi)_i = sum_s w_s psi_{i+s}, so entry (i, i+s) lives at column slot -s
                column[(-s).rem_euclid(g as i64) as usize] += scale * *w;
            }
            Ok(OperatorMatrix::circulant(grid, &column))
        }
    }
}

/// Stencil half-width in samples (0 for the dense spectral scheme's "unbounded").
pub fn stencil_half_width(n: u32, scheme: DerivativeScheme) -> Option<usize> {
    match scheme {
        DerivativeScheme::Spectral => None,
        DerivativeScheme::FiniteDifference { order } => Some(central_stencil(n, order).0),
    }
}
