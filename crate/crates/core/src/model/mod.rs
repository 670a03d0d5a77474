//! Network specifications and the density-matrix codec.
//!
//! A [`NetworkSpec`] is the single description of a model instance: site
//! energies, the Hermitian coupling matrix, per-site dephasing and per-site
//! loss. Everything downstream (Liouvillian, kinetic networks, bounds) is a
//! pure function of it. All rates and energies are in cm⁻¹.

mod codec;
mod file;

pub use codec::{coherence_index, pack_density, unpack_density, DensityVector};
pub use file::{CouplingEntry, SpecFile, TrapEntry, Units};

use std::collections::VecDeque;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// 1 cm⁻¹ expressed in s⁻¹.
pub const CM_INV_IN_PER_SECOND: f64 = 2.9978e10;

/// Converts a rate in ps⁻¹ to cm⁻¹.
pub fn per_ps_to_cm_inv(rate: f64) -> f64 {
    rate * 1e12 / CM_INV_IN_PER_SECOND
}

/// Converts a rate in ns⁻¹ to cm⁻¹.
pub fn per_ns_to_cm_inv(rate: f64) -> f64 {
    rate * 1e9 / CM_INV_IN_PER_SECOND
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    energies: Vec<f64>,
    couplings: DMatrix<Complex64>,
    dephasing: Vec<f64>,
    loss: Vec<f64>,
}

impl NetworkSpec {
    /// Builds a validated spec. `couplings` must be Hermitian with an exactly
    /// zero diagonal; it is symmetrized on the way in.
    pub fn new(
        energies: Vec<f64>,
        couplings: DMatrix<Complex64>,
        dephasing: Vec<f64>,
        loss: Vec<f64>,
    ) -> Result<Self> {
        let n = energies.len();
        if n == 0 {
            return Err(Error::InvalidSpec("a network needs at least one site".into()));
        }
        if couplings.nrows() != n || couplings.ncols() != n {
            return Err(Error::InvalidSpec(format!(
                "coupling matrix is {}x{}, expected {n}x{n}",
                couplings.nrows(),
                couplings.ncols()
            )));
        }
        for (name, v) in [("dephasing", &dephasing), ("loss", &loss)] {
            if v.len() != n {
                return Err(Error::InvalidSpec(format!(
                    "{name} has {} entries, expected {n}",
                    v.len()
                )));
            }
            if let Some((k, x)) = v.iter().enumerate().find(|(_, x)| !(**x >= 0.0) || !x.is_finite()) {
                return Err(Error::InvalidSpec(format!(
                    "{name} rate at site {} is {x}, must be finite and >= 0",
                    k + 1
                )));
            }
        }
        if let Some((k, e)) = energies.iter().enumerate().find(|(_, e)| !e.is_finite()) {
            return Err(Error::InvalidSpec(format!("energy at site {} is {e}", k + 1)));
        }
        for k in 0..n {
            if couplings[(k, k)] != Complex64::new(0.0, 0.0) {
                return Err(Error::InvalidSpec(format!(
                    "coupling diagonal must be zero, found V_{}{} = {}",
                    k + 1,
                    k + 1,
                    couplings[(k, k)]
                )));
            }
        }
        if couplings.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidSpec("couplings must be finite".into()));
        }
        check_hermitian(&couplings)?;
        let couplings = (&couplings + couplings.adjoint()).scale(0.5);
        Ok(Self {
            energies,
            couplings,
            dephasing,
            loss,
        })
    }

    /// Convenience constructor for real symmetric couplings.
    pub fn real(
        energies: Vec<f64>,
        couplings: DMatrix<f64>,
        dephasing: Vec<f64>,
        loss: Vec<f64>,
    ) -> Result<Self> {
        let c = couplings.map(|x| Complex64::new(x, 0.0));
        Self::new(energies, c, dephasing, loss)
    }

    pub fn n(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn couplings(&self) -> &DMatrix<Complex64> {
        &self.couplings
    }

    pub fn coupling(&self, k: usize, l: usize) -> Complex64 {
        self.couplings[(k, l)]
    }

    pub fn dephasing(&self) -> &[f64] {
        &self.dephasing
    }

    pub fn loss(&self) -> &[f64] {
        &self.loss
    }

    /// γ_kl = (γ_k + γ_l)/2.
    pub fn pair_dephasing(&self, k: usize, l: usize) -> f64 {
        0.5 * (self.dephasing[k] + self.dephasing[l])
    }

    /// E_kl = E_k − E_l.
    pub fn pair_energy(&self, k: usize, l: usize) -> f64 {
        self.energies[k] - self.energies[l]
    }

    /// κ_kl = (κ_k + κ_l)/2.
    pub fn pair_loss(&self, k: usize, l: usize) -> f64 {
        0.5 * (self.loss[k] + self.loss[l])
    }

    pub fn has_real_couplings(&self) -> bool {
        self.couplings.iter().all(|z| z.im == 0.0)
    }

    pub fn is_loss_free(&self) -> bool {
        self.loss.iter().all(|&k| k == 0.0)
    }

    pub fn has_full_dephasing(&self) -> bool {
        self.dephasing.iter().all(|&g| g > 0.0)
    }

    pub fn with_dephasing(&self, dephasing: Vec<f64>) -> Result<Self> {
        Self::new(
            self.energies.clone(),
            self.couplings.clone(),
            dephasing,
            self.loss.clone(),
        )
    }

    pub fn with_loss(&self, loss: Vec<f64>) -> Result<Self> {
        Self::new(
            self.energies.clone(),
            self.couplings.clone(),
            self.dephasing.clone(),
            loss,
        )
    }

    /// Scales couplings by `theta` and energies, dephasing and loss by `gamma`.
    pub fn scaled(&self, theta: f64, gamma: f64) -> Result<Self> {
        if !(theta > 0.0 && gamma > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "scaling factors must be positive, got theta={theta}, gamma={gamma}"
            )));
        }
        Self::new(
            self.energies.iter().map(|e| e * gamma).collect(),
            self.couplings.map(|v| v * theta),
            self.dephasing.iter().map(|g| g * gamma).collect(),
            self.loss.iter().map(|k| k * gamma).collect(),
        )
    }
}

fn check_hermitian(m: &DMatrix<Complex64>) -> Result<()> {
    let diff = m - m.adjoint();
    let norm = m.norm();
    let dev = diff.norm();
    let relative = if norm > 0.0 { dev / norm } else { 0.0 };
    if relative > HERMITIAN_TOLERANCE {
        let (mut row, mut col, mut worst) = (0, 0, 0.0);
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let d = diff[(i, j)].norm();
                if d > worst {
                    (row, col, worst) = (i, j, d);
                }
            }
        }
        return Err(Error::NotHermitian {
            row,
            col,
            deviation: worst,
            relative,
        });
    }
    Ok(())
}

/// Relative Frobenius tolerance for Hermiticity checks.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;

/// A base network together with the coupling scale Θ and the
/// energy/dephasing/loss scale Γ.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFamily {
    pub base: NetworkSpec,
    pub theta: f64,
    pub gamma: f64,
}

impl ScalingFamily {
    pub fn new(base: NetworkSpec, theta: f64, gamma: f64) -> Result<Self> {
        if !(theta > 0.0 && gamma > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "scaling family needs theta > 0 and gamma > 0, got {theta}, {gamma}"
            )));
        }
        Ok(Self { base, theta, gamma })
    }

    pub fn instantiate(&self) -> Result<NetworkSpec> {
        self.base.scaled(self.theta, self.gamma)
    }

    pub fn at(&self, theta: f64, gamma: f64) -> Result<NetworkSpec> {
        self.base.scaled(theta, gamma)
    }

    pub fn theta_over_gamma(&self) -> f64 {
        self.theta / self.gamma
    }
}

/// True iff the graph with edges {(k, l) : V_kl ≠ 0} is connected.
pub fn is_connected(spec: &NetworkSpec) -> bool {
    let n = spec.n();
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let mut count = 1;
    while let Some(k) = queue.pop_front() {
        for (l, seen_l) in seen.iter_mut().enumerate() {
            if !*seen_l && spec.coupling(k, l).norm() != 0.0 {
                *seen_l = true;
                count += 1;
                queue.push_back(l);
            }
        }
    }
    count == n
}

/// Trap site and rate for efficiency calculations. The trap rate is part of
/// the site's total loss rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trap {
    /// 0-based site index.
    pub site: usize,
    pub rate: f64,
}

impl Trap {
    pub fn validate(&self, spec: &NetworkSpec) -> Result<()> {
        if self.site >= spec.n() {
            return Err(Error::InvalidArgument(format!(
                "trap site {} outside 1..={}",
                self.site + 1,
                spec.n()
            )));
        }
        if !(self.rate > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "trap rate must be positive, got {}",
                self.rate
            )));
        }
        let total = spec.loss()[self.site];
        if self.rate > total * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "trap rate {} exceeds the total loss {} at site {}",
                self.rate,
                total,
                self.site + 1
            )));
        }
        Ok(())
    }
}

/// Iterates coherence pairs (k, l), k < l, in codec order.
pub fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |k| (k + 1..n).map(move |l| (k, l)))
}

/// 0-based slot p of the pair (k, l), k < l; its real coordinate sits at
/// `n + 2p` and its imaginary one at `n + 2p + 1` (0-based).
pub fn pair_slot(n: usize, k: usize, l: usize) -> usize {
    debug_assert!(k < l && l < n);
    k * (2 * n - k - 1) / 2 + (l - k - 1)
}

pub fn pair_count(n: usize) -> usize {
    n * (n - 1) / 2
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(n: usize, edges: &[(usize, usize)]) -> NetworkSpec {
        let mut v = DMatrix::zeros(n, n);
        for &(k, l) in edges {
            v[(k, l)] = 1.0;
            v[(l, k)] = 1.0;
        }
        NetworkSpec::real(vec![0.0; n], v, vec![1.0; n], vec![0.0; n]).unwrap()
    }

    #[test]
    fn connectivity() {
        assert!(is_connected(&chain(4, &[(0, 1), (1, 2), (2, 3)])));
        assert!(!is_connected(&chain(4, &[(0, 1), (2, 3)])));
        assert!(is_connected(&chain(1, &[])));
    }

    #[test]
    fn rejects_bad_specs() {
        let mut v = DMatrix::<Complex64>::zeros(2, 2);
        v[(0, 1)] = Complex64::new(1.0, 1.0);
        v[(1, 0)] = Complex64::new(1.0, 1.0);
        let err = NetworkSpec::new(vec![0.0; 2], v, vec![1.0; 2], vec![0.0; 2]).unwrap_err();
        assert!(matches!(err, Error::NotHermitian { .. }));

        let v = DMatrix::<f64>::identity(2, 2);
        assert!(NetworkSpec::real(vec![0.0; 2], v, vec![1.0; 2], vec![0.0; 2]).is_err());

        let v = DMatrix::<f64>::zeros(2, 2);
        assert!(NetworkSpec::real(vec![0.0; 2], v.clone(), vec![-1.0, 1.0], vec![0.0; 2]).is_err());
        assert!(NetworkSpec::real(vec![0.0; 2], v, vec![1.0], vec![0.0; 2]).is_err());
    }

    #[test]
    fn pair_slots_are_lexicographic() {
        let n = 5;
        for (p, (k, l)) in pairs(n).enumerate() {
            assert_eq!(pair_slot(n, k, l), p);
        }
        assert_eq!(pairs(n).count(), pair_count(n));
    }

    #[test]
    fn unit_conversion() {
        assert!((per_ps_to_cm_inv(1.0) - 33.3578).abs() < 1e-3);
        assert!((per_ns_to_cm_inv(1.0) - 0.0333578).abs() < 1e-6);
    }

    #[test]
    fn scaling_family_instantiates() {
        let base = chain(3, &[(0, 1), (1, 2)]);
        let fam = ScalingFamily::new(base, 0.5, 2.0).unwrap();
        let s = fam.instantiate().unwrap();
        assert_eq!(s.coupling(0, 1).re, 0.5);
        assert_eq!(s.dephasing()[0], 2.0);
        assert!(ScalingFamily::new(s, 0.0, 1.0).is_err());
    }
}
