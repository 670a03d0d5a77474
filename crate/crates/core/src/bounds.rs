//! Rigorous error bounds for the kinetic approximation and their checks.
//!
//! [`compute_bound_report`] gathers the scalar ingredients (κ, μ, α, α̂, β,
//! b_min, ...). The `check_*` functions compare the bounds against measured
//! differences and report a [`BoundStatus`] per theorem. Each smallness
//! hypothesis is evaluated separately so that a skipped check names the
//! condition that failed.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::analysis::{evolution_error, relaxation_metrics, Probe, RelaxationMetrics};
use crate::error::{Error, Result};
use crate::kinetic::{compute_n0, n_from_blocks};
use crate::linalg;
use crate::liouvillian::{assemble_blocks, LiouvillianBlocks};
use crate::model::{is_connected, pairs, NetworkSpec, ScalingFamily};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub n: usize,
    pub norm_a: f64,
    pub norm_binv: f64,
    pub norm_b0inv: f64,
    pub kappa: f64,
    pub kappa0: f64,
    pub mu: f64,
    pub mu0: f64,
    pub norm_nu: f64,
    pub norm_n: f64,
    /// min γ_kl; b's symmetric part is −diag(γ_kl).
    pub gamma_min: f64,
    pub alpha: f64,
    pub alpha_hat: f64,
    pub beta: f64,
    pub b_min: f64,
}

const REPORT_KEYS: [&str; 14] = [
    "norm_a",
    "norm_binv",
    "norm_b0inv",
    "kappa",
    "kappa0",
    "mu",
    "mu0",
    "norm_nu",
    "norm_n",
    "gamma_min",
    "alpha",
    "alpha_hat",
    "beta",
    "b_min",
];

impl BoundReport {
    pub fn values(&self) -> [(&'static str, f64); 14] {
        let v = [
            self.norm_a,
            self.norm_binv,
            self.norm_b0inv,
            self.kappa,
            self.kappa0,
            self.mu,
            self.mu0,
            self.norm_nu,
            self.norm_n,
            self.gamma_min,
            self.alpha,
            self.alpha_hat,
            self.beta,
            self.b_min,
        ];
        std::array::from_fn(|i| (REPORT_KEYS[i], v[i]))
    }

    /// `key = value` lines at full precision.
    pub fn to_key_value(&self) -> String {
        let mut s = format!("n = {}\n", self.n);
        for (k, v) in self.values() {
            s.push_str(&format!("{k} = {v:.16e}\n"));
        }
        s
    }

    pub fn from_key_value(text: &str) -> Result<Self> {
        let mut map = std::collections::HashMap::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key = value, got '{line}'")))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        let get = |k: &str| -> Result<f64> {
            map.get(k)
                .ok_or_else(|| Error::Parse(format!("missing key {k}")))?
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("{k}: {e}")))
        };
        let n = map
            .get("n")
            .ok_or_else(|| Error::Parse("missing key n".into()))?
            .parse::<usize>()
            .map_err(|e| Error::Parse(format!("n: {e}")))?;
        Ok(Self {
            n,
            norm_a: get("norm_a")?,
            norm_binv: get("norm_binv")?,
            norm_b0inv: get("norm_b0inv")?,
            kappa: get("kappa")?,
            kappa0: get("kappa0")?,
            mu: get("mu")?,
            mu0: get("mu0")?,
            norm_nu: get("norm_nu")?,
            norm_n: get("norm_n")?,
            gamma_min: get("gamma_min")?,
            alpha: get("alpha")?,
            alpha_hat: get("alpha_hat")?,
            beta: get("beta")?,
            b_min: get("b_min")?,
        })
    }

    /// (4/π)κμ⁻¹(1+β).
    pub fn relaxation_bound_quantum(&self) -> f64 {
        4.0 / PI * self.kappa / self.mu * (1.0 + self.beta)
    }

    /// 4κμ⁻²‖ν‖.
    pub fn relaxation_bound_kinetic(&self) -> f64 {
        4.0 * self.kappa * self.norm_nu / (self.mu * self.mu)
    }

    /// e^{−μt/2}·4(4κ + 2κ ln(2α̂/μ) + α̂⁻¹‖a‖²(b_min − μ/2)⁻¹).
    pub fn evolution_bound_quantum(&self, t: f64) -> f64 {
        let c = 4.0
            * (4.0 * self.kappa
                + 2.0 * self.kappa * (2.0 * self.alpha_hat / self.mu).ln()
                + self.norm_a * self.norm_a / (self.alpha_hat * (self.b_min - 0.5 * self.mu)));
        (-0.5 * self.mu * t).exp() * c
    }

    /// 32e^{−μt/2}μ⁻¹κ‖ν‖.
    pub fn evolution_bound_kinetic(&self, t: f64) -> f64 {
        32.0 * (-0.5 * self.mu * t).exp() * self.kappa * self.norm_nu / self.mu
    }

    /// Upper bound on ‖(b − z)⁻¹‖ for Re z > −γ_min.
    fn resolvent_b_bound(&self, re_z: f64) -> f64 {
        1.0 / (self.gamma_min + re_z)
    }

    pub fn hypotheses(&self, theorem: Theorem) -> Vec<Hypothesis> {
        let r = self;
        let a2 = r.norm_a * r.norm_a;
        match theorem {
            Theorem::RelaxationQuantum => vec![
                Hypothesis::new("mu < alpha", r.mu < r.alpha),
                Hypothesis::new("norm(N) <= alpha/2", r.norm_n <= 0.5 * r.alpha),
                Hypothesis::new(
                    "norm(a)^2 * sup norm((b-z)^-1) <= alpha/2 on Re z >= 0",
                    a2 * r.resolvent_b_bound(0.0) <= 0.5 * r.alpha,
                ),
                Hypothesis::new("b_min > 0", r.b_min > 0.0),
            ],
            Theorem::RelaxationKinetic => vec![
                Hypothesis::new("norm(nu) <= norm(b0^-1)^-1 / 2", r.norm_nu <= 0.5 / r.norm_b0inv),
                Hypothesis::new("2 kappa norm(nu) <= mu/2", 2.0 * r.kappa * r.norm_nu <= 0.5 * r.mu),
            ],
            Theorem::EvolutionQuantum => {
                let shifted = r.resolvent_b_bound(-0.5 * r.mu);
                vec![
                    Hypothesis::new("alpha_hat > 0", r.alpha_hat > 0.0),
                    Hypothesis::new("mu < alpha_hat", r.mu < r.alpha_hat),
                    Hypothesis::new("b_min > mu/2", r.b_min > 0.5 * r.mu),
                    Hypothesis::new("norm(N) + mu/2 <= alpha_hat/2", r.norm_n + 0.5 * r.mu <= 0.5 * r.alpha_hat),
                    Hypothesis::new(
                        "norm(a)^2 * sup norm((b-z)^-1) + mu/2 <= alpha_hat/2 on Re z >= -mu/2",
                        shifted.is_finite() && shifted > 0.0 && a2 * shifted + 0.5 * r.mu <= 0.5 * r.alpha_hat,
                    ),
                ]
            }
            Theorem::EvolutionKinetic => vec![
                Hypothesis::new("norm(nu) <= norm(b0^-1)^-1 / 2", r.norm_nu <= 0.5 / r.norm_b0inv),
                Hypothesis::new("kappa norm(nu) <= mu/8", r.kappa * r.norm_nu <= r.mu / 8.0),
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Theorem {
    /// Δτ (quantum vs N).
    RelaxationQuantum,
    /// Δτ₁ (N vs N0).
    RelaxationKinetic,
    /// ‖(T e^{Mt} T† − e^{Nt}) P_I‖.
    EvolutionQuantum,
    /// ‖e^{Nt} − e^{N0 t}‖ on I.
    EvolutionKinetic,
}

impl Theorem {
    pub const ALL: [Theorem; 4] = [
        Theorem::RelaxationQuantum,
        Theorem::RelaxationKinetic,
        Theorem::EvolutionQuantum,
        Theorem::EvolutionKinetic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Theorem::RelaxationQuantum => "relaxation-quantum-vs-N",
            Theorem::RelaxationKinetic => "relaxation-N-vs-N0",
            Theorem::EvolutionQuantum => "evolution-quantum-vs-N",
            Theorem::EvolutionKinetic => "evolution-N-vs-N0",
        }
    }
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub name: &'static str,
    pub holds: bool,
}

impl Hypothesis {
    fn new(name: &'static str, holds: bool) -> Self {
        Self { name, holds }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoundStatus {
    Pass,
    Fail,
    Skipped(String),
}

impl fmt::Display for BoundStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundStatus::Pass => f.write_str("pass"),
            BoundStatus::Fail => f.write_str("fail"),
            BoundStatus::Skipped(why) => write!(f, "skipped ({why})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub theorem: Theorem,
    pub status: BoundStatus,
    /// Measured value at the worst point.
    pub measured: f64,
    /// Bound at the worst point.
    pub bound: f64,
    pub hypotheses: Vec<Hypothesis>,
    /// (t, measured, bound) for evolution checks.
    pub trace: Vec<(f64, f64, f64)>,
}

impl BoundCheck {
    /// bound/measured; infinite when nothing was measured.
    pub fn margin(&self) -> f64 {
        if self.measured > 0.0 {
            self.bound / self.measured
        } else {
            f64::INFINITY
        }
    }

    fn skipped(theorem: Theorem, why: String, hypotheses: Vec<Hypothesis>) -> Self {
        Self {
            theorem,
            status: BoundStatus::Skipped(why),
            measured: f64::NAN,
            bound: f64::NAN,
            hypotheses,
            trace: Vec::new(),
        }
    }
}

/// Gate shared by every bound computation. Complex couplings are an error;
/// other failures are returned as a reason for skipping.
fn precondition_gate(spec: &NetworkSpec) -> Result<Option<String>> {
    if !spec.has_real_couplings() {
        return Err(Error::Precondition(
            "real couplings; the complex case is not covered by the bounds".into(),
        ));
    }
    if !spec.is_loss_free() {
        return Ok(Some("precondition unmet: loss rates must be zero".into()));
    }
    if !spec.has_full_dephasing() {
        return Ok(Some("precondition unmet: every dephasing rate must be positive".into()));
    }
    if !is_connected(spec) {
        return Ok(Some("precondition unmet: network is not connected".into()));
    }
    Ok(None)
}

pub fn compute_bound_report(spec: &NetworkSpec) -> Result<BoundReport> {
    if let Some(why) = precondition_gate(spec)? {
        return Err(Error::Precondition(why));
    }
    let blocks = assemble_blocks(spec);
    report_from_blocks(spec, &blocks)
}

fn report_from_blocks(spec: &NetworkSpec, blocks: &LiouvillianBlocks) -> Result<BoundReport> {
    let b = blocks.b();
    let n_mat = n_from_blocks(blocks)?.matrix;
    let n0 = compute_n0(spec)?.matrix;
    let norm_a = linalg::op_norm(&blocks.a);
    let norm_binv = 1.0 / linalg::min_singular_value(&b);
    let norm_b0inv = 1.0 / linalg::min_singular_value(&blocks.b0);
    let kappa = norm_a * norm_a * norm_binv * norm_binv;
    let kappa0 = norm_a * norm_a * norm_b0inv * norm_b0inv;
    let mu = 1.0 / crate::analysis::relaxation_time(&n_mat)?;
    let mu0 = 1.0 / crate::analysis::relaxation_time(&n0)?;
    let norm_nu = linalg::op_norm(&blocks.nu);
    let norm_n = linalg::op_norm(&n_mat);
    let gamma_min = pairs(spec.n())
        .map(|(k, l)| spec.pair_dephasing(k, l))
        .fold(f64::INFINITY, f64::min);
    let alpha = f64::min(0.5 / norm_binv, 0.25 * mu / kappa);
    let alpha_hat = f64::min(0.5 / norm_binv, 0.125 * mu / kappa) - mu;
    let b_min = linalg::min_abs_real_eigenvalue(&b)?;
    let beta = f64::max(1.0, 1.0 / (alpha * b_min * norm_binv * norm_binv));
    Ok(BoundReport {
        n: spec.n(),
        norm_a,
        norm_binv,
        norm_b0inv,
        kappa,
        kappa0,
        mu,
        mu0,
        norm_nu,
        norm_n,
        gamma_min,
        alpha,
        alpha_hat,
        beta,
        b_min,
    })
}

fn unmet(hyps: &[Hypothesis]) -> Option<String> {
    let names: Vec<&str> = hyps.iter().filter(|h| !h.holds).map(|h| h.name).collect();
    (!names.is_empty()).then(|| format!("hypothesis unmet: {}", names.join("; ")))
}

fn judge(measured: f64, bound: f64) -> BoundStatus {
    if measured <= bound {
        BoundStatus::Pass
    } else {
        BoundStatus::Fail
    }
}

/// Checks Δτ and Δτ₁ against their bounds.
pub fn check_relaxation_bounds(spec: &NetworkSpec) -> Result<Vec<BoundCheck>> {
    let ths = [Theorem::RelaxationQuantum, Theorem::RelaxationKinetic];
    if let Some(why) = precondition_gate(spec)? {
        return Ok(ths.iter().map(|&t| BoundCheck::skipped(t, why.clone(), Vec::new())).collect());
    }
    let report = compute_bound_report(spec)?;
    let metrics = relaxation_metrics(spec, Probe::OperatorNorm)?;
    Ok(relaxation_checks(&report, &metrics))
}

pub fn relaxation_checks(report: &BoundReport, metrics: &RelaxationMetrics) -> Vec<BoundCheck> {
    [
        (Theorem::RelaxationQuantum, metrics.dtau, report.relaxation_bound_quantum()),
        (Theorem::RelaxationKinetic, metrics.dtau1, report.relaxation_bound_kinetic()),
    ]
    .into_iter()
    .map(|(theorem, measured, bound)| {
        let hypotheses = report.hypotheses(theorem);
        match unmet(&hypotheses) {
            Some(why) => BoundCheck::skipped(theorem, why, hypotheses),
            None => BoundCheck {
                theorem,
                status: judge(measured, bound),
                measured,
                bound,
                hypotheses,
                trace: Vec::new(),
            },
        }
    })
    .collect()
}

/// Checks both evolution bounds at every time in `times`.
pub fn check_evolution_bounds(spec: &NetworkSpec, times: &[f64]) -> Result<Vec<BoundCheck>> {
    let ths = [Theorem::EvolutionQuantum, Theorem::EvolutionKinetic];
    if let Some(why) = precondition_gate(spec)? {
        return Ok(ths.iter().map(|&t| BoundCheck::skipped(t, why.clone(), Vec::new())).collect());
    }
    let report = compute_bound_report(spec)?;
    let errors = evolution_error(spec, times)?;
    Ok(ths
        .iter()
        .map(|&theorem| {
            let hypotheses = report.hypotheses(theorem);
            if let Some(why) = unmet(&hypotheses) {
                return BoundCheck::skipped(theorem, why, hypotheses);
            }
            let trace: Vec<(f64, f64, f64)> = errors
                .iter()
                .map(|e| match theorem {
                    Theorem::EvolutionQuantum => (e.t, e.quantum_vs_n, report.evolution_bound_quantum(e.t)),
                    _ => (e.t, e.n_vs_n0, report.evolution_bound_kinetic(e.t)),
                })
                .collect();
            let worst = trace
                .iter()
                .copied()
                .max_by(|x, y| (x.1 / x.2).total_cmp(&(y.1 / y.2)))
                .unwrap_or((0.0, 0.0, f64::INFINITY));
            let status = if trace.iter().all(|&(_, m, b)| m <= b) {
                BoundStatus::Pass
            } else {
                BoundStatus::Fail
            };
            BoundCheck {
                theorem,
                status,
                measured: worst.1,
                bound: worst.2,
                hypotheses,
                trace,
            }
        })
        .collect())
}

/// Default time grid: log-spaced early times on the coherence scale plus a
/// uniform grid over [0, 10τ].
pub fn default_time_grid(report: &BoundReport, spec: &NetworkSpec) -> Vec<f64> {
    let gmax = spec.dephasing().iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut ts: Vec<f64> = (0..15).map(|i| 10f64.powf(-3.0 + 3.0 * i as f64 / 14.0) / gmax).collect();
    let tau = 1.0 / report.mu;
    ts.extend((0..40).map(|i| 10.0 * tau * i as f64 / 39.0));
    ts
}

/// ‖S(z)‖ on the zero-sum subspace, S(z) = (z − aᵀ(b−z)⁻¹a)⁻¹ − (z − N)⁻¹.
pub fn resolvent_difference_norm(blocks: &LiouvillianBlocks, n_matrix: &DMatrix<f64>, z: Complex64) -> Result<f64> {
    let n = blocks.n;
    let q = linalg::to_complex(&linalg::inequality_basis(n));
    let dc = blocks.a.nrows();
    let bz = linalg::to_complex(&blocks.b()) - DMatrix::<Complex64>::identity(dc, dc) * z;
    let ac = linalg::to_complex(&blocks.a);
    let x = linalg::solve_complex(&bz, &(&ac * &q), "b - z")?;
    let eff = q.adjoint() * ac.transpose() * x;
    let id = DMatrix::<Complex64>::identity(n - 1, n - 1) * z;
    let nq = q.adjoint() * linalg::to_complex(n_matrix) * &q;
    let inv1 = linalg::solve_complex(&(&id - eff), &DMatrix::identity(n - 1, n - 1), "z - a^T (b - z)^-1 a")?;
    let inv2 = linalg::solve_complex(&(&id - nq), &DMatrix::identity(n - 1, n - 1), "z - N")?;
    Ok(linalg::op_norm_c(&(inv1 - inv2)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaPoint {
    pub lemma: &'static str,
    pub z: Complex64,
    pub measured: f64,
    pub bound: f64,
}

impl LemmaPoint {
    pub fn holds(&self) -> bool {
        self.measured <= self.bound
    }
}

/// Spot checks of the resolvent-difference estimates on the imaginary axis
/// and on the shifted line Re z = −μ/2, with `count` log-spaced |y| values.
pub fn lemma_checks(spec: &NetworkSpec, count: usize) -> Result<Vec<LemmaPoint>> {
    let report = compute_bound_report(spec)?;
    let blocks = assemble_blocks(spec);
    let n_mat = n_from_blocks(&blocks)?.matrix;
    let r = &report;
    let lo = (1e-3 * r.mu).log10();
    let hi = (1e2 * r.gamma_min.max(r.alpha)).log10();
    let ys: Vec<f64> = (0..count)
        .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (count.max(2) - 1) as f64))
        .collect();
    let a2 = r.norm_a * r.norm_a;
    let mut out = Vec::new();
    for &y in &ys {
        for sign in [1.0, -1.0] {
            let z = Complex64::new(0.0, sign * y);
            let s = resolvent_difference_norm(&blocks, &n_mat, z)?;
            if z.norm() <= r.alpha {
                out.push(LemmaPoint {
                    lemma: "right-half-plane small |z|",
                    z,
                    measured: s,
                    bound: 4.0 * r.kappa / (r.mu * r.mu) * z.norm(),
                });
            }
            out.push(LemmaPoint {
                lemma: "right-half-plane",
                z,
                measured: s,
                bound: 4.0 * r.beta * r.kappa / z.norm(),
            });

            let z = Complex64::new(-0.5 * r.mu, sign * y);
            let s = resolvent_difference_norm(&blocks, &n_mat, z)?;
            if y <= r.alpha_hat {
                out.push(LemmaPoint {
                    lemma: "shifted line small |y|",
                    z,
                    measured: s,
                    bound: f64::min(16.0 * r.kappa / (r.mu * r.mu), 4.0 * r.kappa / (y * y)) * z.norm(),
                });
            } else {
                out.push(LemmaPoint {
                    lemma: "shifted line large |y|",
                    z,
                    measured: s,
                    bound: 4.0 * a2 / (y * y * (r.b_min - 0.5 * r.mu)),
                });
            }
        }
    }
    Ok(out)
}

/// For symmetric A < 0 and Re z ≥ 0 returns (‖(z−A)⁻¹‖, c⁻¹, |z|⁻¹) where
/// A ≤ −c.
pub fn negative_definite_resolvent(a: &DMatrix<f64>, z: Complex64) -> Result<(f64, f64, f64)> {
    let eig = linalg::symmetric_eigen(a);
    let c = -eig.eigenvalues.max();
    if !(c > 0.0) {
        return Err(Error::InvalidArgument("matrix is not negative definite".into()));
    }
    if z.re < 0.0 {
        return Err(Error::InvalidArgument("need Re z >= 0".into()));
    }
    let n = a.nrows();
    let m = DMatrix::<Complex64>::identity(n, n) * z - linalg::to_complex(a);
    let inv = linalg::solve_complex(&m, &DMatrix::identity(n, n), "z - A")?;
    Ok((linalg::op_norm_c(&inv), 1.0 / c, 1.0 / z.norm()))
}

/// Returns (‖(A+B)⁻¹ − A⁻¹‖, 2‖A⁻¹‖²‖B‖) when ‖B‖ ≤ ½‖A⁻¹‖⁻¹, None otherwise.
pub fn perturbed_inverse(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<Option<(f64, f64)>> {
    let ainv = linalg::inverse_guarded(a, "A")?;
    let na = linalg::op_norm(&ainv);
    let nb = linalg::op_norm(b);
    if nb > 0.5 / na {
        return Ok(None);
    }
    let abinv = linalg::inverse_guarded(&(a + b), "A + B")?;
    Ok(Some((linalg::op_norm(&(abinv - &ainv)), 2.0 * na * na * nb)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub rms_residual: f64,
    pub used: usize,
}

/// Values below this are treated as numerical noise and excluded from fits.
pub const NOISE_FLOOR: f64 = 1e-12;
pub const MIN_FIT_POINTS: usize = 4;

/// Least-squares slope of log₁₀ y against log₁₀ x.
pub fn fit_log_slope(xs: &[f64], ys: &[f64]) -> Result<SlopeFit> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            found: ys.len(),
        });
    }
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && y.is_finite() && **y >= NOISE_FLOOR)
        .map(|(x, y)| (x.log10(), y.log10()))
        .collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData {
            usable: pts.len(),
            required: MIN_FIT_POINTS,
        });
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData {
            usable: 1,
            required: MIN_FIT_POINTS,
        });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / m).sqrt();
    Ok(SlopeFit {
        slope,
        intercept,
        rms_residual: rms,
        used: pts.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopePoint {
    pub theta_over_gamma: f64,
    pub metrics: RelaxationMetrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeStudy {
    pub points: Vec<SlopePoint>,
    /// Quantum vs N.
    pub quantum_vs_n: Result<SlopeFit>,
    /// Quantum vs N0.
    pub quantum_vs_n0: Result<SlopeFit>,
    /// N vs N0.
    pub n_vs_n0: Result<SlopeFit>,
}

impl SlopeStudy {
    pub fn from_points(points: Vec<SlopePoint>) -> Self {
        let xs: Vec<f64> = points.iter().map(|p| p.theta_over_gamma).collect();
        let fit = |f: fn(&RelaxationMetrics) -> f64| {
            let ys: Vec<f64> = points.iter().map(|p| f(&p.metrics)).collect();
            fit_log_slope(&xs, &ys)
        };
        Self {
            quantum_vs_n: fit(|m| m.dtau_rel),
            quantum_vs_n0: fit(|m| m.dtau0_rel),
            n_vs_n0: fit(|m| m.dtau1_rel),
            points,
        }
    }
}

/// Relative relaxation errors over a grid of Θ values at the family's Γ.
pub fn scaling_slope_study(family: &ScalingFamily, theta_grid: &[f64], probe: Probe) -> Result<SlopeStudy> {
    check_grid_span(theta_grid, family.gamma)?;
    let points = theta_grid
        .iter()
        .map(|&theta| {
            let spec = family.at(theta, family.gamma)?;
            Ok(SlopePoint {
                theta_over_gamma: theta / family.gamma,
                metrics: relaxation_metrics(&spec, probe)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SlopeStudy::from_points(points))
}

/// Grids must cover at least two decades of Θ/Γ.
pub fn check_grid_span(theta_grid: &[f64], gamma: f64) -> Result<()> {
    let lo = theta_grid.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = theta_grid.iter().copied().fold(0.0, f64::max);
    if !(lo > 0.0) || (hi / lo).log10() < 2.0 - 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "theta grid must span at least two decades of theta/gamma, got [{}, {}]",
            lo / gamma,
            hi / gamma
        )));
    }
    Ok(())
}
