//! Dense linear-algebra helpers shared across modules.

use nalgebra::{DMatrix, DVector, Dyn, LU};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Condition-number ceiling for guarded solves.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Orthonormal basis of {x : Σ x_k = 0} as the columns of an n×(n−1) matrix.
pub fn inequality_basis(n: usize) -> DMatrix<f64> {
    let mut q = DMatrix::zeros(n, n.saturating_sub(1));
    for j in 1..n {
        let s = 1.0 / ((j * (j + 1)) as f64).sqrt();
        for i in 0..j {
            q[(i, j - 1)] = s;
        }
        q[(j, j - 1)] = -(j as f64) * s;
    }
    q
}

/// Orthogonal projector onto the zero-sum subspace.
pub fn inequality_projector(n: usize) -> DMatrix<f64> {
    DMatrix::identity(n, n) - DMatrix::from_element(n, n, 1.0 / n as f64)
}

/// Qᵀ G Q for the zero-sum basis Q.
pub fn restrict(g: &DMatrix<f64>) -> DMatrix<f64> {
    let q = inequality_basis(g.nrows());
    q.transpose() * g * &q
}

/// Operator norm of X restricted to the zero-sum subspace, ‖X Q‖₂.
pub fn norm_on_subspace(x: &DMatrix<f64>) -> f64 {
    let q = inequality_basis(x.ncols());
    op_norm(&(x * q))
}

const ITER_EPS: [f64; 3] = [f64::EPSILON, 1e-14, 1e-12];

fn iteration_budget(dim: usize) -> usize {
    500 * dim.max(10)
}

/// Singular values through a bounded iteration, loosening the tolerance if
/// the sweep stalls.
pub fn singular_values(a: &DMatrix<f64>) -> DVector<f64> {
    for eps in ITER_EPS {
        if let Some(svd) = a.clone().try_svd(false, false, eps, iteration_budget(a.nrows().max(a.ncols()))) {
            return svd.singular_values;
        }
    }
    panic!("SVD failed to converge on a {}x{} matrix", a.nrows(), a.ncols());
}

pub fn singular_values_c(a: &DMatrix<Complex64>) -> DVector<f64> {
    for eps in ITER_EPS {
        if let Some(svd) = a.clone().try_svd(false, false, eps, iteration_budget(a.nrows().max(a.ncols()))) {
            return svd.singular_values;
        }
    }
    panic!("SVD failed to converge on a {}x{} matrix", a.nrows(), a.ncols());
}

/// Symmetric eigendecomposition with a bounded iteration.
pub fn symmetric_eigen(a: &DMatrix<f64>) -> nalgebra::SymmetricEigen<f64, Dyn> {
    for eps in ITER_EPS {
        if let Some(e) = nalgebra::SymmetricEigen::try_new(a.clone(), eps, iteration_budget(a.nrows())) {
            return e;
        }
    }
    panic!("symmetric eigensolver failed to converge on a {}x{} matrix", a.nrows(), a.ncols());
}

pub fn op_norm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    singular_values(a).max()
}

pub fn op_norm_c(a: &DMatrix<Complex64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    singular_values_c(a).max()
}

pub fn min_singular_value(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    singular_values(a).min()
}

/// Hager/Higham estimate of ‖A⁻¹‖₁ from LU factors of A and Aᵀ.
fn inverse_norm1_estimate(lu: &LU<f64, Dyn, Dyn>, lut: &LU<f64, Dyn, Dyn>) -> Option<f64> {
    let n = lu.l().nrows();
    let mut x = DVector::from_element(n, 1.0 / n as f64);
    let mut est = 0.0;
    for _ in 0..5 {
        let y = lu.solve(&x)?;
        est = y.lp_norm(1);
        let xi = y.map(|v| if v >= 0.0 { 1.0 } else { -1.0 });
        let z = lut.solve(&xi)?;
        let j = z.iamax();
        let zmax = z[j].abs();
        if zmax <= z.dot(&x) {
            break;
        }
        x = DVector::zeros(n);
        x[j] = 1.0;
    }
    // Higham's alternating-sign test vector guards against underestimates.
    let alt = DVector::from_fn(n, |i, _| {
        let s = if i % 2 == 0 { 1.0 } else { -1.0 };
        s * (1.0 + i as f64 / (n.max(2) - 1) as f64)
    });
    let y = lu.solve(&alt)?;
    Some(est.max(2.0 * y.lp_norm(1) / (3.0 * n as f64)))
}

fn norm1(a: &DMatrix<f64>) -> f64 {
    a.column_iter().map(|c| c.lp_norm(1)).fold(0.0, f64::max)
}

/// A factorization that has passed the condition guard.
pub struct GuardedLu {
    lu: LU<f64, Dyn, Dyn>,
    pub condition: f64,
}

impl GuardedLu {
    pub fn new(a: &DMatrix<f64>, what: &'static str) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                found: a.ncols(),
            });
        }
        let fail = |condition: f64| Error::IllConditioned {
            what,
            condition,
            smallest_singular_value: min_singular_value(a),
        };
        let lu = a.clone().lu();
        let lut = a.transpose().lu();
        let inv = inverse_norm1_estimate(&lu, &lut).ok_or_else(|| fail(f64::INFINITY))?;
        let condition = inv * norm1(a);
        if !condition.is_finite() || condition > CONDITION_LIMIT {
            return Err(fail(condition));
        }
        Ok(Self { lu, condition })
    }

    pub fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.lu.solve(b).expect("factorization checked non-singular")
    }

    pub fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        self.lu.solve(b).expect("factorization checked non-singular")
    }
}

/// Solves A X = B behind the condition guard.
pub fn solve_guarded(a: &DMatrix<f64>, b: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    Ok(GuardedLu::new(a, what)?.solve(b))
}

pub fn inverse_guarded(a: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    solve_guarded(a, &DMatrix::identity(a.nrows(), a.nrows()), what)
}

/// Complex solve; fails only on an exactly singular pivot.
pub fn solve_complex(
    a: &DMatrix<Complex64>,
    b: &DMatrix<Complex64>,
    what: &'static str,
) -> Result<DMatrix<Complex64>> {
    a.clone().lu().solve(b).ok_or_else(|| Error::IllConditioned {
        what,
        condition: f64::INFINITY,
        smallest_singular_value: singular_values_c(a).min(),
    })
}

pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    a.clone().exp()
}

/// e^{A t}, using a symmetric eigendecomposition when A is symmetric.
pub fn propagator(a: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    if is_symmetric(a, 1e-13) {
        let eig = symmetric_eigen(a);
        let d = eig.eigenvalues.map(|l| (l * t).exp());
        let v = &eig.eigenvectors;
        v * DMatrix::from_diagonal(&d) * v.transpose()
    } else {
        (a * t).exp()
    }
}

pub fn is_symmetric(a: &DMatrix<f64>, rtol: f64) -> bool {
    a.is_square() && (a - a.transpose()).norm() <= rtol * a.norm().max(f64::MIN_POSITIVE)
}

/// Eigenvalues of a general real matrix via a bounded Schur iteration.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<DVector<Complex64>> {
    let iters = 200 * a.nrows().max(10);
    for eps in [1e-15, 1e-13, 1e-11] {
        if let Some(s) = a.clone().try_schur(eps, iters) {
            return Ok(s.complex_eigenvalues());
        }
    }
    Err(Error::IllConditioned {
        what: "Schur iteration",
        condition: f64::INFINITY,
        smallest_singular_value: min_singular_value(a),
    })
}

/// Largest real part over the spectrum.
pub fn spectral_abscissa(a: &DMatrix<f64>) -> Result<f64> {
    if is_symmetric(a, 1e-13) {
        return Ok(symmetric_eigen(a).eigenvalues.max());
    }
    Ok(eigenvalues(a)?.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
}

/// Smallest |Re λ| over the spectrum.
pub fn min_abs_real_eigenvalue(a: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(a)?.iter().map(|z| z.re.abs()).fold(f64::INFINITY, f64::min))
}

pub fn to_complex(a: &DMatrix<f64>) -> DMatrix<Complex64> {
    a.map(|x| Complex64::new(x, 0.0))
}
