//! TOML network spec files.
//!
//! ```toml
//! n = 2
//! energies = [0.0, 100.0]        # cm⁻¹
//! dephasing = [50.0, 50.0]
//! loss = [0.0, 1.0]
//! rate_units = "per-ps"          # dephasing, loss and trap rate; default "cm-1"
//! couplings = [{ i = 1, j = 2, re = -20.0, im = 0.0 }]
//!
//! [trap]
//! site = 2
//! rate = 1.0
//! ```
//!
//! Site indices are 1-based. Unlisted couplings are zero and each listed
//! entry also sets its Hermitian partner.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{per_ns_to_cm_inv, per_ps_to_cm_inv, NetworkSpec, Trap};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Units {
    #[default]
    #[serde(rename = "cm-1")]
    CmInv,
    #[serde(rename = "per-ps")]
    PerPs,
    #[serde(rename = "per-ns")]
    PerNs,
}

impl Units {
    pub fn to_cm_inv(self, x: f64) -> f64 {
        match self {
            Units::CmInv => x,
            Units::PerPs => per_ps_to_cm_inv(x),
            Units::PerNs => per_ns_to_cm_inv(x),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingEntry {
    pub i: usize,
    pub j: usize,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrapEntry {
    pub site: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub n: usize,
    pub energies: Vec<f64>,
    pub dephasing: Vec<f64>,
    #[serde(default)]
    pub loss: Option<Vec<f64>>,
    #[serde(default)]
    pub rate_units: Units,
    #[serde(default)]
    pub couplings: Vec<CouplingEntry>,
    #[serde(default)]
    pub trap: Option<TrapEntry>,
}

impl SpecFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Validates and converts to a spec (rates in cm⁻¹) and optional trap.
    pub fn to_spec(&self) -> Result<(NetworkSpec, Option<Trap>)> {
        let n = self.n;
        if self.energies.len() != n {
            return Err(Error::InvalidSpec(format!(
                "energies has {} entries, n = {n}",
                self.energies.len()
            )));
        }
        let mut v = DMatrix::<Complex64>::zeros(n, n);
        let mut set = vec![false; n * n];
        for c in &self.couplings {
            if c.i == 0 || c.j == 0 || c.i > n || c.j > n {
                return Err(Error::InvalidSpec(format!(
                    "coupling ({}, {}) outside 1..={n}",
                    c.i, c.j
                )));
            }
            if c.i == c.j {
                return Err(Error::InvalidSpec(format!(
                    "diagonal coupling ({}, {}) not allowed",
                    c.i, c.j
                )));
            }
            let (i, j) = (c.i - 1, c.j - 1);
            if set[i * n + j] {
                return Err(Error::InvalidSpec(format!(
                    "coupling ({}, {}) listed twice",
                    c.i, c.j
                )));
            }
            set[i * n + j] = true;
            set[j * n + i] = true;
            let z = Complex64::new(c.re, c.im);
            v[(i, j)] = z;
            v[(j, i)] = z.conj();
        }
        let u = self.rate_units;
        let dephasing = self.dephasing.iter().map(|&x| u.to_cm_inv(x)).collect();
        let loss = match &self.loss {
            Some(l) => l.iter().map(|&x| u.to_cm_inv(x)).collect(),
            None => vec![0.0; n],
        };
        let spec = NetworkSpec::new(self.energies.clone(), v, dephasing, loss)?;
        let trap = match &self.trap {
            Some(t) => {
                if t.site == 0 || t.site > n {
                    return Err(Error::InvalidSpec(format!(
                        "trap site {} outside 1..={n}",
                        t.site
                    )));
                }
                let trap = Trap {
                    site: t.site - 1,
                    rate: u.to_cm_inv(t.rate),
                };
                trap.validate(&spec)?;
                Some(trap)
            }
            None => None,
        };
        Ok((spec, trap))
    }

    /// Writes a spec as a file with rates in cm⁻¹.
    pub fn from_spec(spec: &NetworkSpec, trap: Option<Trap>) -> Self {
        let n = spec.n();
        let couplings = super::pairs(n)
            .filter_map(|(k, l)| {
                let z = spec.coupling(k, l);
                (z.norm() != 0.0).then_some(CouplingEntry {
                    i: k + 1,
                    j: l + 1,
                    re: z.re,
                    im: z.im,
                })
            })
            .collect();
        Self {
            n,
            energies: spec.energies().to_vec(),
            dephasing: spec.dephasing().to_vec(),
            loss: Some(spec.loss().to_vec()),
            rate_units: Units::CmInv,
            couplings,
            trap: trap.map(|t| TrapEntry {
                site: t.site + 1,
                rate: t.rate,
            }),
        }
    }
}
