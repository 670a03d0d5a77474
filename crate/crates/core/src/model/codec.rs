use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::SQRT_2;

use super::{pair_slot, HERMITIAN_TOLERANCE};
use crate::error::{Error, Result};

/// Real coordinates of an n×n Hermitian matrix: n populations followed by
/// √2·Re and √2·Im of each upper-triangular entry.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityVector {
    n: usize,
    data: DVector<f64>,
}

impl DensityVector {
    pub fn from_vector(n: usize, data: DVector<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: data.len(),
            });
        }
        Ok(Self { n, data })
    }

    /// Embeds a population vector (all coherences zero).
    pub fn from_populations(p: &DVector<f64>) -> Self {
        let n = p.len();
        let mut data = DVector::zeros(n * n);
        data.rows_mut(0, n).copy_from(p);
        Self { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.data
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.data
    }

    pub fn populations(&self) -> DVector<f64> {
        self.data.rows(0, self.n).into_owned()
    }
}

/// 1-based (Re, Im) indices of the coherence (k, l), 1 ≤ k < l ≤ n.
pub fn coherence_index(n: usize, k: usize, l: usize) -> Result<(usize, usize)> {
    if !(1 <= k && k < l && l <= n) {
        return Err(Error::InvalidArgument(format!(
            "coherence index needs 1 <= k < l <= n, got k={k}, l={l}, n={n}"
        )));
    }
    let re = n + 2 * n * (k - 1) + 2 * l - k * (k + 1) - 1;
    Ok((re, re + 1))
}

pub fn pack_density(rho: &DMatrix<Complex64>) -> Result<DensityVector> {
    let n = rho.nrows();
    if rho.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: rho.ncols(),
        });
    }
    let diff = rho - rho.adjoint();
    let scale = rho.norm();
    let relative = if scale > 0.0 { diff.norm() / scale } else { 0.0 };
    if relative > HERMITIAN_TOLERANCE {
        let mut worst = (0, 0, 0.0);
        for i in 0..n {
            for j in 0..n {
                let d = diff[(i, j)].norm();
                if d > worst.2 {
                    worst = (i, j, d);
                }
            }
        }
        return Err(Error::NotHermitian {
            row: worst.0,
            col: worst.1,
            deviation: worst.2,
            relative,
        });
    }
    let mut data = DVector::zeros(n * n);
    for k in 0..n {
        data[k] = rho[(k, k)].re;
        for l in k + 1..n {
            let z = 0.5 * (rho[(k, l)] + rho[(l, k)].conj());
            let p = n + 2 * pair_slot(n, k, l);
            data[p] = SQRT_2 * z.re;
            data[p + 1] = SQRT_2 * z.im;
        }
    }
    Ok(DensityVector { n, data })
}

pub fn unpack_density(v: &DensityVector) -> DMatrix<Complex64> {
    let n = v.n;
    let d = &v.data;
    let mut rho = DMatrix::zeros(n, n);
    for k in 0..n {
        rho[(k, k)] = Complex64::new(d[k], 0.0);
        for l in k + 1..n {
            let p = n + 2 * pair_slot(n, k, l);
            let z = Complex64::new(d[p], d[p + 1]) / SQRT_2;
            rho[(k, l)] = z;
            rho[(l, k)] = z.conj();
        }
    }
    rho
}
