//! Built-in networks: the FMO monomer and the synthetic scaling families.
//!
//! Synthetic bases are built at Θ = Γ = 1 and scaled with
//! [`ScalingFamily`]; random draws use ChaCha8 so that a seed fully
//! determines a network.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{per_ns_to_cm_inv, per_ps_to_cm_inv, NetworkSpec, ScalingFamily, Trap};

/// FMO monomer Hamiltonian in cm⁻¹ (site energies on the diagonal).
pub const FMO_HAMILTONIAN: [[f64; 7]; 7] = [
    [280.0, -106.0, 8.0, -5.0, 6.0, -8.0, -4.0],
    [-106.0, 420.0, 28.0, 6.0, 2.0, 13.0, 1.0],
    [8.0, 28.0, 0.0, -62.0, -1.0, -9.0, 17.0],
    [-5.0, 6.0, -62.0, 175.0, -70.0, -19.0, -57.0],
    [6.0, 2.0, -1.0, -70.0, 320.0, 40.0, -2.0],
    [-8.0, 13.0, -9.0, -19.0, 40.0, 360.0, 32.0],
    [-4.0, 1.0, 17.0, -57.0, -2.0, 32.0, 260.0],
];

/// Initial populations: half on site 1, half on site 6.
pub const FMO_INITIAL_POPULATIONS: [f64; 7] = [0.5, 0.0, 0.0, 0.0, 0.0, 0.5, 0.0];

/// 0-based trap site (site 3).
pub const FMO_TRAP_SITE: usize = 2;

/// FMO monomer at uniform dephasing `gamma` (cm⁻¹): 1 ns⁻¹ loss everywhere
/// plus a 1 ps⁻¹ trap at site 3.
pub fn fmo(gamma: f64) -> Result<(NetworkSpec, Trap)> {
    let n = 7;
    let energies = (0..n).map(|k| FMO_HAMILTONIAN[k][k]).collect();
    let v = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { FMO_HAMILTONIAN[i][j] });
    let trap_rate = per_ps_to_cm_inv(1.0);
    let mut loss = vec![per_ns_to_cm_inv(1.0); n];
    loss[FMO_TRAP_SITE] += trap_rate;
    let spec = NetworkSpec::real(energies, v, vec![gamma; n], loss)?;
    Ok((
        spec,
        Trap {
            site: FMO_TRAP_SITE,
            rate: trap_rate,
        },
    ))
}

pub fn fmo_initial_populations() -> DVector<f64> {
    DVector::from_row_slice(&FMO_INITIAL_POPULATIONS)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    HighlyIdeal,
    HighlyRandom,
    ChainIdeal,
    ChainRandom,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 4] = [
        FamilyKind::HighlyIdeal,
        FamilyKind::HighlyRandom,
        FamilyKind::ChainIdeal,
        FamilyKind::ChainRandom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::HighlyIdeal => "highly-ideal",
            FamilyKind::HighlyRandom => "highly-random",
            FamilyKind::ChainIdeal => "chain-ideal",
            FamilyKind::ChainRandom => "chain-random",
        }
    }

    pub fn is_random(self) -> bool {
        matches!(self, FamilyKind::HighlyRandom | FamilyKind::ChainRandom)
    }

    /// Base network at Θ = Γ = 1. `e` is the odd-site energy of the ideal
    /// chain and ignored otherwise.
    pub fn base(self, n: usize, e: f64, seed: u64) -> Result<NetworkSpec> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match self {
            FamilyKind::HighlyIdeal => highly_connected_ideal(n),
            FamilyKind::HighlyRandom => highly_connected_random(n, &mut rng),
            FamilyKind::ChainIdeal => circular_chain_ideal(n, e),
            FamilyKind::ChainRandom => circular_chain_random(n, &mut rng),
        }
    }

    pub fn family(self, n: usize, e: f64, seed: u64, theta: f64, gamma: f64) -> Result<ScalingFamily> {
        ScalingFamily::new(self.base(n, e, seed)?, theta, gamma)
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FamilyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown family '{s}', expected one of highly-ideal, highly-random, chain-ideal, chain-random"
                ))
            })
    }
}

fn check_size(n: usize, min: usize) -> Result<()> {
    if n < min {
        return Err(Error::InvalidArgument(format!("family needs n >= {min}, got {n}")));
    }
    Ok(())
}

/// Uniform on (0, 1].
fn open_unit<R: Rng>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

fn unit_spec(n: usize, energies: Vec<f64>, v: DMatrix<f64>) -> Result<NetworkSpec> {
    NetworkSpec::real(energies, v, vec![1.0; n], vec![0.0; n])
}

pub fn highly_connected_ideal(n: usize) -> Result<NetworkSpec> {
    check_size(n, 2)?;
    let v = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 1.0 });
    unit_spec(n, vec![0.0; n], v)
}

pub fn highly_connected_random<R: Rng>(n: usize, rng: &mut R) -> Result<NetworkSpec> {
    check_size(n, 2)?;
    let mut v = DMatrix::zeros(n, n);
    for k in 0..n {
        for l in k + 1..n {
            let x = open_unit(rng);
            v[(k, l)] = x;
            v[(l, k)] = x;
        }
    }
    let energies = (0..n).map(|_| rng.random::<f64>()).collect();
    unit_spec(n, energies, v)
}

fn ring(n: usize, weight: impl FnMut(usize) -> f64) -> DMatrix<f64> {
    let mut weight = weight;
    let mut v = DMatrix::zeros(n, n);
    for k in 0..n {
        let l = (k + 1) % n;
        if l == k || v[(k, l)] != 0.0 {
            continue;
        }
        let w = weight(k);
        v[(k, l)] = w;
        v[(l, k)] = w;
    }
    v
}

/// Ring with unit couplings; even (0-based) sites at 0, odd sites at `e`.
pub fn circular_chain_ideal(n: usize, e: f64) -> Result<NetworkSpec> {
    check_size(n, 3)?;
    if e != 0.0 && n % 2 == 1 {
        return Err(Error::InvalidArgument(format!(
            "alternating chain energies need an even number of sites, got n = {n}"
        )));
    }
    let energies = (0..n).map(|k| if k % 2 == 1 { e } else { 0.0 }).collect();
    unit_spec(n, energies, ring(n, |_| 1.0))
}

pub fn circular_chain_random<R: Rng>(n: usize, rng: &mut R) -> Result<NetworkSpec> {
    check_size(n, 3)?;
    let v = ring(n, |_| open_unit(rng));
    let energies = (0..n).map(|_| rng.random::<f64>()).collect();
    unit_spec(n, energies, v)
}

/// Random connected network: a random spanning tree plus extra edges with
/// probability `density`; V ∈ ±(0, 1], E ∈ [0, 1), γ ∈ [0.5, 1.5), and
/// κ ∈ [0, 0.1) when `lossy`.
pub fn random_connected<R: Rng>(n: usize, density: f64, lossy: bool, rng: &mut R) -> Result<NetworkSpec> {
    check_size(n, 2)?;
    let mut v = DMatrix::zeros(n, n);
    let draw = |rng: &mut R| {
        let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
        s * open_unit(rng)
    };
    for k in 1..n {
        let parent = rng.random_range(0..k);
        let w = draw(rng);
        v[(k, parent)] = w;
        v[(parent, k)] = w;
    }
    for k in 0..n {
        for l in k + 1..n {
            if v[(k, l)] == 0.0 && rng.random::<f64>() < density {
                let w = draw(rng);
                v[(k, l)] = w;
                v[(l, k)] = w;
            }
        }
    }
    let energies = (0..n).map(|_| rng.random::<f64>()).collect();
    let dephasing = (0..n).map(|_| 0.5 + rng.random::<f64>()).collect();
    let loss = (0..n)
        .map(|_| if lossy { 0.1 * rng.random::<f64>() } else { 0.0 })
        .collect();
    NetworkSpec::real(energies, v, dephasing, loss)
}

/// Per-draw seed derived from a base seed (SplitMix64 step).
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
