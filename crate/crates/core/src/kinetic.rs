//! Classical kinetic networks obtained by eliminating the coherences.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, GuardedLu};
use crate::liouvillian::{assemble_blocks, tilde_transform, LiouvillianBlocks};
use crate::model::{pair_slot, pairs, NetworkSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KineticKind {
    /// Lowest order, built from b0 alone.
    N0,
    /// Full Schur complement.
    N,
    /// k-th term of the ν-expansion.
    Term(usize),
    /// Sum of terms 0..=K.
    PartialSum(usize),
    /// Schur complement of an arbitrary generator.
    Generalized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KineticMatrix {
    pub kind: KineticKind,
    pub matrix: DMatrix<f64>,
}

impl KineticMatrix {
    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        self.matrix.column_iter().map(|c| c.sum()).collect()
    }

    pub fn is_symmetric(&self, rtol: f64) -> bool {
        linalg::is_symmetric(&self.matrix, rtol)
    }
}

/// Closed-form N0 with μ_kl = 2|V_kl|²(γ_kl+κ_kl)/((γ_kl+κ_kl)² + E_kl²)
/// off the diagonal and (N0)_kk = −κ_k − Σ_l μ_kl.
pub fn compute_n0(spec: &NetworkSpec) -> Result<KineticMatrix> {
    let n = spec.n();
    let mut m = DMatrix::zeros(n, n);
    for (k, l) in pairs(n) {
        let v2 = spec.coupling(k, l).norm_sqr();
        if v2 == 0.0 {
            continue;
        }
        let r = spec.pair_dephasing(k, l) + spec.pair_loss(k, l);
        let e = spec.pair_energy(k, l);
        let den = r * r + e * e;
        if r == 0.0 || den == 0.0 {
            return Err(Error::SingularRate { k: k + 1, l: l + 1 });
        }
        let mu = 2.0 * v2 * r / den;
        m[(k, l)] = mu;
        m[(l, k)] = mu;
        m[(k, k)] -= mu;
        m[(l, l)] -= mu;
    }
    for k in 0..n {
        m[(k, k)] -= spec.loss()[k];
    }
    Ok(KineticMatrix {
        kind: KineticKind::N0,
        matrix: m,
    })
}

/// N = aᵀ(b + c2)⁻¹a + c1.
pub fn n_from_blocks(blocks: &LiouvillianBlocks) -> Result<KineticMatrix> {
    let lu = GuardedLu::new(&blocks.coherence_block(), "coherence block b + c2")?;
    let x = lu.solve(&blocks.a);
    Ok(KineticMatrix {
        kind: KineticKind::N,
        matrix: blocks.a.transpose() * x + &blocks.c1,
    })
}

pub fn compute_n(spec: &NetworkSpec) -> Result<KineticMatrix> {
    n_from_blocks(&assemble_blocks(spec))
}

/// N through the complex tilde blocks; agrees with [`compute_n`] up to
/// rounding and serves as an independent route.
pub fn compute_n_tilde(spec: &NetworkSpec) -> Result<KineticMatrix> {
    let t = tilde_transform(spec);
    let n = spec.n();
    let mut b = &t.b0 + &t.nu;
    for (k, l) in pairs(n) {
        let o = 2 * pair_slot(n, k, l);
        let kap = Complex64::new(spec.pair_loss(k, l), 0.0);
        b[(o, o)] -= kap;
        b[(o + 1, o + 1)] -= kap;
    }
    let x = linalg::solve_complex(&b, &t.a, "tilde coherence block")?;
    let full = t.a.adjoint() * x;
    let mut m = full.map(|z| z.re);
    for k in 0..n {
        m[(k, k)] -= spec.loss()[k];
    }
    Ok(KineticMatrix {
        kind: KineticKind::N,
        matrix: m,
    })
}

/// Lazily generates the ν-expansion terms N_k = aᵀ(b0+c2)⁻¹(−ν(b0+c2)⁻¹)ᵏa;
/// the zeroth term carries c1.
pub struct SeriesTerms<'a> {
    blocks: &'a LiouvillianBlocks,
    b0_inv: DMatrix<f64>,
    w: DMatrix<f64>,
    k: usize,
}

impl<'a> SeriesTerms<'a> {
    pub fn new(blocks: &'a LiouvillianBlocks) -> Result<Self> {
        let b0 = &blocks.b0 + &blocks.c2;
        let b0_inv = block_diagonal_inverse(&b0)?;
        let w = &b0_inv * &blocks.a;
        Ok(Self {
            blocks,
            b0_inv,
            w,
            k: 0,
        })
    }
}

impl Iterator for SeriesTerms<'_> {
    type Item = KineticMatrix;

    fn next(&mut self) -> Option<KineticMatrix> {
        let mut m = self.blocks.a.transpose() * &self.w;
        if self.k == 0 {
            m += &self.blocks.c1;
        }
        let kind = KineticKind::Term(self.k);
        self.w = -(&self.b0_inv * (&self.blocks.nu * &self.w));
        self.k += 1;
        Some(KineticMatrix { kind, matrix: m })
    }
}

/// Inverse of a matrix made of 2×2 diagonal blocks.
fn block_diagonal_inverse(b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = b.nrows();
    let mut inv = DMatrix::zeros(d, d);
    for o in (0..d).step_by(2) {
        let (p, q, r, s) = (b[(o, o)], b[(o, o + 1)], b[(o + 1, o)], b[(o + 1, o + 1)]);
        let det = p * s - q * r;
        if det == 0.0 {
            return Err(Error::IllConditioned {
                what: "pairwise block b0 + c2",
                condition: f64::INFINITY,
                smallest_singular_value: 0.0,
            });
        }
        inv[(o, o)] = s / det;
        inv[(o, o + 1)] = -q / det;
        inv[(o + 1, o)] = -r / det;
        inv[(o + 1, o + 1)] = p / det;
    }
    Ok(inv)
}

pub fn compute_nk(spec: &NetworkSpec, k: usize) -> Result<KineticMatrix> {
    let blocks = assemble_blocks(spec);
    let term = SeriesTerms::new(&blocks)?
        .nth(k)
        .expect("series is infinite");
    Ok(term)
}

/// Σ_{k=0}^{K} N_k.
pub fn partial_sum(spec: &NetworkSpec, order: usize) -> Result<KineticMatrix> {
    let blocks = assemble_blocks(spec);
    let n = spec.n();
    let sum = SeriesTerms::new(&blocks)?
        .take(order + 1)
        .fold(DMatrix::zeros(n, n), |acc, t| acc + t.matrix);
    Ok(KineticMatrix {
        kind: KineticKind::PartialSum(order),
        matrix: sum,
    })
}

/// Schur complement m_PP − m_PC m_CC⁻¹ m_CP of an n²×n² generator with the
/// first n coordinates as populations.
pub fn extract_generalized_network(m: &DMatrix<f64>) -> Result<KineticMatrix> {
    let d = m.nrows();
    if m.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: m.ncols(),
        });
    }
    let n = (d as f64).sqrt().round() as usize;
    if n * n != d || n == 0 {
        return Err(Error::InvalidArgument(format!(
            "generator dimension {d} is not a perfect square"
        )));
    }
    let dc = d - n;
    let pp = m.view((0, 0), (n, n));
    let pc = m.view((0, n), (n, dc));
    let cp = m.view((n, 0), (dc, n)).into_owned();
    let cc = m.view((n, n), (dc, dc)).into_owned();
    let x = GuardedLu::new(&cc, "coherence block of the generator")?.solve(&cp);
    Ok(KineticMatrix {
        kind: KineticKind::Generalized,
        matrix: pp - pc * x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families;
    use crate::liouvillian::assemble_m;

    #[test]
    fn two_site_closed_form() {
        let v = DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]);
        let spec = NetworkSpec::real(vec![1.0, 0.0], v, vec![2.0, 2.0], vec![0.0; 2]).unwrap();
        let n = compute_n(&spec).unwrap().matrix;
        // No ν for two sites, so N equals N0: 2·0.25·2/(4+1) = 0.2.
        let expect = DMatrix::from_row_slice(2, 2, &[-0.2, 0.2, 0.2, -0.2]);
        assert!((n - &expect).amax() < 1e-15);
        assert!((compute_n0(&spec).unwrap().matrix - expect).amax() < 1e-15);
    }

    #[test]
    fn routes_agree() {
        let (spec, _) = families::fmo(100.0).unwrap();
        let n = compute_n(&spec).unwrap().matrix;
        let nt = compute_n_tilde(&spec).unwrap().matrix;
        let ng = extract_generalized_network(&assemble_m(&spec)).unwrap().matrix;
        assert!((&n - nt).amax() < 1e-10 * n.amax());
        assert!((&n - ng).amax() < 1e-10 * n.amax());
        let n0 = compute_n0(&spec).unwrap().matrix;
        let t0 = compute_nk(&spec, 0).unwrap().matrix;
        assert!((n0 - t0).amax() < 1e-12);
    }

    #[test]
    fn singular_rate_is_reported() {
        let v = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let spec = NetworkSpec::real(vec![0.0, 0.0], v, vec![0.0, 0.0], vec![0.0; 2]).unwrap();
        assert_eq!(compute_n0(&spec).unwrap_err(), Error::SingularRate { k: 1, l: 2 });
    }

    #[test]
    fn partial_sums_converge_to_n() {
        let spec = families::highly_connected_random(5, &mut families::rng_from_seed(3))
            .unwrap()
            .scaled(0.01, 1.0)
            .unwrap();
        let n = compute_n(&spec).unwrap().matrix;
        let mut prev = f64::INFINITY;
        for order in [0, 2, 4, 6] {
            let err = (partial_sum(&spec, order).unwrap().matrix - &n).norm();
            assert!(err < prev);
            prev = err;
        }
        assert!(prev < 1e-7 * n.norm());
    }
}
