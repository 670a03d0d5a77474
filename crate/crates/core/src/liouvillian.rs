//! Real Liouvillian generator in the density-vector coordinates.
//!
//! With populations P and coherences C, the generator splits as
//!
//! ```text
//! M = [ c1   -aᵀ          ]
//!     [ a    b0 + ν + c2  ]
//! ```
//!
//! where `a` couples populations to coherences, `b0` holds pairwise
//! dephasing and energy gaps, `ν` couples coherences sharing one site and
//! `c1`, `c2` are the loss terms.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::model::{pack_density, pair_count, pair_slot, pairs, unpack_density, DensityVector, NetworkSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct LiouvillianBlocks {
    pub n: usize,
    /// (n²−n)×n.
    pub a: DMatrix<f64>,
    pub b0: DMatrix<f64>,
    pub nu: DMatrix<f64>,
    /// n×n diagonal, −κ_k.
    pub c1: DMatrix<f64>,
    /// (n²−n)×(n²−n) diagonal, −κ_kl.
    pub c2: DMatrix<f64>,
}

impl LiouvillianBlocks {
    fn coherence_dim(&self) -> usize {
        self.n * self.n - self.n
    }

    /// b = b0 + ν.
    pub fn b(&self) -> DMatrix<f64> {
        &self.b0 + &self.nu
    }

    /// Full coherence block b0 + ν + c2.
    pub fn coherence_block(&self) -> DMatrix<f64> {
        &self.b0 + &self.nu + &self.c2
    }

    pub fn m(&self) -> DMatrix<f64> {
        let n = self.n;
        let d = n * n;
        let mut m = DMatrix::zeros(d, d);
        m.view_mut((0, 0), (n, n)).copy_from(&self.c1);
        m.view_mut((0, n), (n, d - n)).copy_from(&(-self.a.transpose()));
        m.view_mut((n, 0), (d - n, n)).copy_from(&self.a);
        m.view_mut((n, n), (d - n, d - n)).copy_from(&self.coherence_block());
        m
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n, self.coherence_dim())
    }
}

pub fn assemble_blocks(spec: &NetworkSpec) -> LiouvillianBlocks {
    let n = spec.n();
    let dc = n * n - n;
    let mut a = DMatrix::zeros(dc, n);
    let mut b0 = DMatrix::zeros(dc, dc);
    let mut nu = DMatrix::zeros(dc, dc);
    let mut c2 = DMatrix::zeros(dc, dc);
    let c1 = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        n,
        spec.loss().iter().map(|k| -k),
    ));

    // Stored coordinate of ρ_pq (p ≠ q): the x index and the sign of y.
    let coord = |p: usize, q: usize| -> (usize, f64) {
        if p < q {
            (2 * pair_slot(n, p, q), 1.0)
        } else {
            (2 * pair_slot(n, q, p), -1.0)
        }
    };

    for (k, l) in pairs(n) {
        let x = 2 * pair_slot(n, k, l);
        let y = x + 1;
        let v = spec.coupling(k, l);
        a[(x, k)] = -SQRT_2 * v.im;
        a[(x, l)] = SQRT_2 * v.im;
        a[(y, k)] = SQRT_2 * v.re;
        a[(y, l)] = -SQRT_2 * v.re;

        let g = spec.pair_dephasing(k, l);
        let e = spec.pair_energy(k, l);
        b0[(x, x)] = -g;
        b0[(x, y)] = e;
        b0[(y, x)] = -e;
        b0[(y, y)] = -g;

        let kap = spec.pair_loss(k, l);
        c2[(x, x)] = -kap;
        c2[(y, y)] = -kap;

        // ρ̇_kl ⊃ −i V_kj ρ_jl + i V_jl ρ_kj for j ∉ {k, l}.
        for j in (0..n).filter(|&j| j != k && j != l) {
            let terms = [
                (Complex64::new(0.0, -1.0) * spec.coupling(k, j), coord(j, l)),
                (Complex64::new(0.0, 1.0) * spec.coupling(j, l), coord(k, j)),
            ];
            for (c, (col, sigma)) in terms {
                nu[(x, col)] += c.re;
                nu[(x, col + 1)] -= c.im * sigma;
                nu[(y, col)] += c.im;
                nu[(y, col + 1)] += c.re * sigma;
            }
        }
    }
    LiouvillianBlocks { n, a, b0, nu, c1, c2 }
}

pub fn assemble_m(spec: &NetworkSpec) -> DMatrix<f64> {
    assemble_blocks(spec).m()
}

/// Applies the master-equation superoperator to a single n×n matrix.
pub fn apply_superoperator(spec: &NetworkSpec, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = spec.n();
    let i = Complex64::new(0.0, 1.0);
    let mut h = spec.couplings().clone();
    for k in 0..n {
        h[(k, k)] += spec.energies()[k];
    }
    // A = −(i/2)·diag(κ).
    let mut anti = DMatrix::<Complex64>::zeros(n, n);
    for k in 0..n {
        anti[(k, k)] = -0.5 * i * spec.loss()[k];
    }
    let mut out = (&h * rho - rho * &h) * (-i) + (&anti * rho + rho * &anti) * (-i);
    for k in 0..n {
        let g = spec.dephasing()[k];
        if g == 0.0 {
            continue;
        }
        let mut p = DMatrix::<Complex64>::zeros(n, n);
        p[(k, k)] = Complex64::new(1.0, 0.0);
        let pr = &p * rho;
        let rp = rho * &p;
        out += (&pr * &p - (pr + rp) * Complex64::new(0.5, 0.0)) * Complex64::new(g, 0.0);
    }
    out
}

/// Builds M column by column from the superoperator acting on the
/// orthonormal Hermitian basis behind the codec.
pub fn assemble_m_direct(spec: &NetworkSpec) -> DMatrix<f64> {
    let n = spec.n();
    let d = n * n;
    let mut m = DMatrix::zeros(d, d);
    for j in 0..d {
        let mut e = nalgebra::DVector::zeros(d);
        e[j] = 1.0;
        let basis = unpack_density(&DensityVector::from_vector(n, e).expect("length n²"));
        let image = apply_superoperator(spec, &basis);
        let col = pack_density(&image).expect("superoperator preserves Hermiticity");
        m.set_column(j, col.as_vector());
    }
    m
}

/// The n×n² map T taking a density vector to its populations.
pub fn population_map(n: usize) -> DMatrix<f64> {
    let mut t = DMatrix::zeros(n, n * n);
    for k in 0..n {
        t[(k, k)] = 1.0;
    }
    t
}

/// Half of `M` in the complex basis where b0 is diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct TildeBlocks {
    pub n: usize,
    pub a: DMatrix<Complex64>,
    pub b0: DMatrix<Complex64>,
    pub nu: DMatrix<Complex64>,
}

/// U = 1 ⊗ U₀ with U₀ = (1/√2)[[−i, i], [1, 1]].
pub fn tilde_unitary(n: usize) -> DMatrix<Complex64> {
    let dc = n * n - n;
    let s = 1.0 / SQRT_2;
    let mut u = DMatrix::zeros(dc, dc);
    for p in 0..pair_count(n) {
        let o = 2 * p;
        u[(o, o)] = Complex64::new(0.0, -s);
        u[(o, o + 1)] = Complex64::new(0.0, s);
        u[(o + 1, o)] = Complex64::new(s, 0.0);
        u[(o + 1, o + 1)] = Complex64::new(s, 0.0);
    }
    u
}

/// Builds ã, b̃0 and ν̃ entry by entry.
pub fn tilde_transform(spec: &NetworkSpec) -> TildeBlocks {
    let n = spec.n();
    let dc = n * n - n;
    let i = Complex64::new(0.0, 1.0);
    let mut a = DMatrix::zeros(dc, n);
    let mut b0 = DMatrix::zeros(dc, dc);
    let mut nu = DMatrix::zeros(dc, dc);
    let v = |p: usize, q: usize| spec.coupling(p, q);

    for (k, l) in pairs(n) {
        let o = 2 * pair_slot(n, k, l);
        a[(o, k)] = v(k, l).conj();
        a[(o + 1, k)] = v(k, l);
        a[(o, l)] = -v(k, l).conj();
        a[(o + 1, l)] = -v(k, l);
        let alpha = Complex64::new(-spec.pair_dephasing(k, l), spec.pair_energy(k, l));
        b0[(o, o)] = alpha;
        b0[(o + 1, o + 1)] = alpha.conj();
    }

    // Coherences sharing site k; l labels the row pair, m the column pair.
    let slot = |p: usize, q: usize| 2 * pair_slot(n, p.min(q), p.max(q));
    for k in 0..n {
        for l in (0..n).filter(|&l| l != k) {
            let r = slot(k, l);
            for m in (0..n).filter(|&m| m != k && m != l) {
                let c = slot(k, m);
                let vlm = v(l, m);
                if k < l && k < m {
                    nu[(r, c)] += -i * vlm;
                    nu[(r + 1, c + 1)] += i * vlm.conj();
                } else if l < k && m < k {
                    nu[(r, c)] += i * vlm.conj();
                    nu[(r + 1, c + 1)] += -i * vlm;
                } else if l < k {
                    nu[(r, c + 1)] += -i * vlm.conj();
                    nu[(r + 1, c)] += i * vlm;
                } else {
                    nu[(r, c + 1)] += i * vlm;
                    nu[(r + 1, c)] += -i * vlm.conj();
                }
            }
        }
    }
    TildeBlocks { n, a, b0, nu }
}

/// Writes a matrix as CSV with 17 significant digits.
pub fn write_matrix_csv<W: std::io::Write>(w: &mut W, m: &DMatrix<f64>) -> std::io::Result<()> {
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

/// Reads a CSV matrix, skipping `#` comment lines.
pub fn read_matrix_csv(text: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", ln + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::DimensionMismatch {
                    expected: first.len(),
                    found: row.len(),
                });
            }
        }
        rows.push(row);
    }
    let ncols = rows.first().map_or(0, Vec::len);
    Ok(DMatrix::from_row_iterator(
        rows.len(),
        ncols,
        rows.into_iter().flatten(),
    ))
}
