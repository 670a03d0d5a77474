use std::fmt::Write as _;
use std::path::PathBuf;

use quetron_core::FamilyKind;
use sha2::{Digest, Sha256};

use crate::CliError;

/// Log-spaced grid between `lo` and `hi` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Grid {
    pub fn new(lo: f64, hi: f64, count: usize) -> Result<Self, CliError> {
        if count < 2 {
            return Err(CliError::Usage(format!("grid needs at least 2 points, got {count}")));
        }
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(CliError::Usage(format!("grid needs 0 < lo < hi, got lo={lo}, hi={hi}")));
        }
        Ok(Self { lo, hi, count })
    }

    pub fn points(&self) -> Vec<f64> {
        let (a, b) = (self.lo.log10(), self.hi.log10());
        (0..self.count)
            .map(|i| 10f64.powf(a + (b - a) * i as f64 / (self.count - 1) as f64))
            .collect()
    }
}

/// Site counts given as `a..b`, `a..b:step` or `a,b,c`.
pub fn parse_sizes(text: &str) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::Usage(format!("cannot parse size list '{text}'"));
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
    let sizes = if let Some((lo, rest)) = text.split_once("..") {
        let (hi, step) = match rest.split_once(':') {
            Some((h, s)) => (num(h)?, num(s)?),
            None => (num(rest)?, 1),
        };
        if step == 0 || hi < num(lo)? {
            return Err(bad());
        }
        (num(lo)?..=hi).step_by(step).collect()
    } else {
        text.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    if sizes.is_empty() {
        return Err(bad());
    }
    Ok(sizes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    FmoSweep,
    IdealNetwork,
    Chain,
    DimScan,
    BoundsReport,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::FmoSweep => "fmo-sweep",
            Command::IdealNetwork => "ideal-network",
            Command::Chain => "chain",
            Command::DimScan => "dim-scan",
            Command::BoundsReport => "bounds-report",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dumps {
    pub m: bool,
    pub n: bool,
    pub n0: bool,
    pub nk: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub spec_path: Option<PathBuf>,
    pub family: Option<FamilyKind>,
    pub n: Option<usize>,
    pub theta: Option<f64>,
    pub gamma: Option<f64>,
    pub e: Option<f64>,
    pub seed: u64,
    pub grid: Option<Grid>,
    pub sizes: Option<Vec<usize>>,
    pub draws: Option<usize>,
    pub out: PathBuf,
    pub dumps: Dumps,
}

impl ExperimentConfig {
    pub fn new(command: Command, out: PathBuf) -> Self {
        Self {
            command,
            spec_path: None,
            family: None,
            n: None,
            theta: None,
            gamma: None,
            e: None,
            seed: 0,
            grid: None,
            sizes: None,
            draws: None,
            out,
            dumps: Dumps::default(),
        }
    }

    /// Canonical text of every setting that affects results; the output
    /// directory is excluded so relocated runs hash identically.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let opt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:e}"));
        let _ = write!(s, "command={};", self.command.name());
        let _ = write!(
            s,
            "spec={};",
            self.spec_path.as_ref().map_or("-".into(), |p| p.display().to_string())
        );
        let _ = write!(s, "family={};", self.family.map_or("-", |f| f.name()));
        let _ = write!(s, "n={};", self.n.map_or("-".into(), |n| n.to_string()));
        let _ = write!(s, "theta={};gamma={};e={};", opt(self.theta), opt(self.gamma), opt(self.e));
        let _ = write!(s, "seed={};", self.seed);
        match self.grid {
            Some(g) => {
                let _ = write!(s, "grid={:e},{:e},{};", g.lo, g.hi, g.count);
            }
            None => s.push_str("grid=-;"),
        }
        let _ = write!(s, "sizes={:?};draws={:?};", self.sizes, self.draws);
        let _ = write!(s, "dumps={:?}", self.dumps);
        s
    }

    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        for (name, v) in [("theta", self.theta), ("gamma", self.gamma)] {
            if let Some(x) = v {
                if !(x > 0.0 && x.is_finite()) {
                    return Err(CliError::Usage(format!("--{name} must be positive, got {x}")));
                }
            }
        }
        if let Some(e) = self.e {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(CliError::Usage(format!("--e must be >= 0, got {e}")));
            }
        }
        if self.n == Some(0) {
            return Err(CliError::Usage("--n must be positive".into()));
        }
        if self.draws == Some(0) {
            return Err(CliError::Usage("--draws must be positive".into()));
        }
        Ok(())
    }
}
