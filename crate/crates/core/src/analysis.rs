//! Dynamics, relaxation operators and transport efficiency.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kinetic::{compute_n0, extract_generalized_network, n_from_blocks};
use crate::linalg::{self, GuardedLu};
use crate::liouvillian::{assemble_blocks, population_map};
use crate::model::{is_connected, DensityVector, NetworkSpec, Trap};

/// Relative threshold below which a singular value counts as zero.
pub const NULL_THRESHOLD: f64 = 1e-12;

/// x(t) = e^{Mt} x(0).
pub fn propagate(m: &DMatrix<f64>, x0: &DensityVector, t: f64) -> Result<DensityVector> {
    let d = m.nrows();
    if x0.as_vector().len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: x0.as_vector().len(),
        });
    }
    DensityVector::from_vector(x0.n(), linalg::expm(&(m * t)) * x0.as_vector())
}

/// τ = 1/σ_min(Qᵀ G Q) for a kinetic generator G.
pub fn relaxation_time(g: &DMatrix<f64>) -> Result<f64> {
    let r = linalg::restrict(g);
    let smin = linalg::min_singular_value(&r);
    if !(smin > NULL_THRESHOLD * linalg::op_norm(g)) {
        return Err(Error::DegenerateSpectrum {
            multiplicity: 2,
            expected: 1,
        });
    }
    Ok(1.0 / smin)
}

/// ∫₀^∞ e^{Gt} P_I dt = −Q (QᵀGQ)⁻¹ Qᵀ as an n×n matrix.
pub fn kinetic_relaxation_operator(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let q = linalg::inequality_basis(g.nrows());
    let inv = linalg::inverse_guarded(&(q.transpose() * g * &q), "restricted kinetic generator")?;
    Ok(-(&q * inv * q.transpose()))
}

fn check_null_space(m: &DMatrix<f64>) -> Result<()> {
    let sv = linalg::singular_values(m);
    let cut = NULL_THRESHOLD * sv.max();
    let zeros = sv.iter().filter(|&&s| s <= cut).count();
    if zeros != 1 {
        return Err(Error::DegenerateSpectrum {
            multiplicity: zeros,
            expected: 1,
        });
    }
    Ok(())
}

fn generator_order(m: &DMatrix<f64>) -> Result<usize> {
    let d = m.nrows();
    let n = (d as f64).sqrt().round() as usize;
    if n * n != d || m.ncols() != d {
        return Err(Error::InvalidArgument(format!(
            "generator of shape {}x{} is not n²×n²",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(n)
}

/// ∫₀^∞ T e^{Mt} T† P_I dt for a trace-preserving generator M, via the
/// bordered system [[M, r], [lᵀ, 0]] with l the trace functional and r the
/// maximally mixed state.
pub fn quantum_relaxation_operator(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = generator_order(m)?;
    let d = n * n;
    let trace_drift: f64 = (0..d).map(|j| (0..n).map(|k| m[(k, j)]).sum::<f64>().abs()).fold(0.0, f64::max);
    if trace_drift > NULL_THRESHOLD * linalg::op_norm(m).max(1.0) {
        return Err(Error::Precondition("a loss-free (trace-preserving) generator".into()));
    }
    check_null_space(m)?;
    let mut k = DMatrix::zeros(d + 1, d + 1);
    k.view_mut((0, 0), (d, d)).copy_from(m);
    for i in 0..n {
        k[(i, d)] = 1.0 / n as f64;
        k[(d, i)] = 1.0;
    }
    let p = linalg::inequality_projector(n);
    let mut rhs = DMatrix::zeros(d + 1, n);
    rhs.view_mut((0, 0), (n, n)).copy_from(&(-p));
    let y = GuardedLu::new(&k, "bordered generator")?.solve(&rhs);
    Ok(y.view((0, 0), (n, n)).into_owned())
}

#[derive(Debug, Clone)]
pub struct QuadratureResult {
    pub operator: DMatrix<f64>,
    pub horizon: f64,
    pub tail_estimate: f64,
}

// Gauss–Kronrod 7/15 nodes on [-1, 1] (non-negative half) and weights.
const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const K_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const G_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> DMatrix<f64>>(f: &F, a: f64, b: f64) -> (DMatrix<f64>, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let f0 = f(c);
    let mut kron = &f0 * K_WEIGHTS[7];
    let mut gauss = &f0 * G_WEIGHTS[3];
    for j in 0..7 {
        let x = h * GK_NODES[j];
        let s = f(c - x) + f(c + x);
        kron += &s * K_WEIGHTS[j];
        if j % 2 == 1 {
            gauss += &s * G_WEIGHTS[j / 2];
        }
    }
    let err = ((&kron - &gauss) * h).norm();
    (kron * h, err)
}

fn adaptive<F: Fn(f64) -> DMatrix<f64>>(f: &F, a: f64, b: f64, tol: f64, depth: usize) -> DMatrix<f64> {
    let (val, err) = gk15(f, a, b);
    if err <= tol || depth == 0 {
        return val;
    }
    let mid = 0.5 * (a + b);
    adaptive(f, a, mid, 0.5 * tol, depth - 1) + adaptive(f, mid, b, 0.5 * tol, depth - 1)
}

/// Direct time integration of T e^{Mt} T† P_I over geometric panels up to
/// `horizon_factor`·τ, where τ is the relaxation time of the eliminated
/// network. Meant as an independent check on small systems.
pub fn quantum_relaxation_operator_quadrature(
    m: &DMatrix<f64>,
    horizon_factor: f64,
    rtol: f64,
) -> Result<QuadratureResult> {
    let n = generator_order(m)?;
    let tau = relaxation_time(&extract_generalized_network(m)?.matrix)?;
    let horizon = horizon_factor * tau;
    let p = linalg::inequality_projector(n);
    let f = |t: f64| -> DMatrix<f64> {
        let e = linalg::expm(&(m * t));
        e.view((0, 0), (n, n)) * &p
    };
    let scale = tau;
    let mut edge = 0.1 / linalg::op_norm(m).max(f64::MIN_POSITIVE);
    let mut lo = 0.0;
    let mut acc = DMatrix::zeros(n, n);
    while lo < horizon {
        let hi = edge.min(horizon);
        acc += adaptive(&f, lo, hi, rtol * scale * (hi - lo) / horizon, 12);
        lo = hi;
        edge *= 2.0;
    }
    let tail_estimate = linalg::op_norm(&f(horizon)) * tau;
    Ok(QuadratureResult {
        operator: acc,
        horizon,
        tail_estimate,
    })
}

/// How relaxation-time differences are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Probe {
    /// Operator norm over the zero-sum subspace.
    #[default]
    OperatorNorm,
    /// Action on the zero-sum part of an excitation localized at a site
    /// (0-based).
    Site(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxationMetrics {
    pub tau: f64,
    pub tau0: f64,
    pub mu: f64,
    pub mu0: f64,
    /// Quantum model against N.
    pub dtau: f64,
    /// Quantum model against N0.
    pub dtau0: f64,
    /// N against N0.
    pub dtau1: f64,
    pub dtau_rel: f64,
    pub dtau0_rel: f64,
    pub dtau1_rel: f64,
}

fn measure(x: &DMatrix<f64>, probe: Probe) -> f64 {
    match probe {
        Probe::OperatorNorm => linalg::norm_on_subspace(x),
        Probe::Site(k) => {
            let n = x.ncols();
            let mut v = DVector::from_element(n, -1.0 / n as f64);
            v[k] += 1.0;
            let norm = v.norm();
            (x * v / norm).norm()
        }
    }
}

fn require_relaxation_preconditions(spec: &NetworkSpec) -> Result<()> {
    if !spec.is_loss_free() {
        return Err(Error::Precondition("a loss-free network".into()));
    }
    if !is_connected(spec) {
        return Err(Error::Precondition("a connected network".into()));
    }
    Ok(())
}

pub fn relaxation_metrics(spec: &NetworkSpec, probe: Probe) -> Result<RelaxationMetrics> {
    require_relaxation_preconditions(spec)?;
    if let Probe::Site(k) = probe {
        if k >= spec.n() {
            return Err(Error::InvalidArgument(format!("probe site {} outside network", k + 1)));
        }
    }
    let blocks = assemble_blocks(spec);
    let n = n_from_blocks(&blocks)?.matrix;
    let n0 = compute_n0(spec)?.matrix;
    let rm = quantum_relaxation_operator(&blocks.m())?;
    let rn = kinetic_relaxation_operator(&n)?;
    let rn0 = kinetic_relaxation_operator(&n0)?;
    let mu = 1.0 / relaxation_time(&n)?;
    let mu0 = 1.0 / relaxation_time(&n0)?;
    let tau = measure(&rn, probe);
    let tau0 = measure(&rn0, probe);
    let dtau = measure(&(&rm - &rn), probe);
    let dtau0 = measure(&(&rm - &rn0), probe);
    let dtau1 = measure(&(&rn - &rn0), probe);
    Ok(RelaxationMetrics {
        tau,
        tau0,
        mu,
        mu0,
        dtau,
        dtau0,
        dtau1,
        dtau_rel: dtau / tau,
        dtau0_rel: dtau0 / tau0,
        dtau1_rel: dtau1 / tau,
    })
}

/// N-versus-N0 relaxation difference without building the quantum
/// generator's relaxation operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KineticRelaxation {
    pub tau: f64,
    pub tau0: f64,
    pub dtau1: f64,
    pub dtau1_rel: f64,
}

pub fn kinetic_relaxation_metrics(spec: &NetworkSpec, probe: Probe) -> Result<KineticRelaxation> {
    require_relaxation_preconditions(spec)?;
    let n = crate::kinetic::compute_n(spec)?.matrix;
    let n0 = compute_n0(spec)?.matrix;
    let rn = kinetic_relaxation_operator(&n)?;
    let rn0 = kinetic_relaxation_operator(&n0)?;
    let tau = measure(&rn, probe);
    let dtau1 = measure(&(&rn - &rn0), probe);
    Ok(KineticRelaxation {
        tau,
        tau0: measure(&rn0, probe),
        dtau1,
        dtau1_rel: dtau1 / tau,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionError {
    pub t: f64,
    /// ‖(T e^{Mt} T† − e^{Nt}) P_I‖.
    pub quantum_vs_n: f64,
    /// ‖(e^{Nt} − e^{N0 t}) P_I‖.
    pub n_vs_n0: f64,
    /// ‖(T e^{Mt} T† − e^{N0 t}) P_I‖.
    pub quantum_vs_n0: f64,
}

pub fn evolution_error(spec: &NetworkSpec, times: &[f64]) -> Result<Vec<EvolutionError>> {
    let blocks = assemble_blocks(spec);
    let m = blocks.m();
    let nm = n_from_blocks(&blocks)?.matrix;
    let n0 = compute_n0(spec)?.matrix;
    let n = spec.n();
    let q = linalg::inequality_basis(n);
    times
        .iter()
        .map(|&t| {
            if !(t >= 0.0) {
                return Err(Error::InvalidArgument(format!("time must be >= 0, got {t}")));
            }
            let em = linalg::expm(&(&m * t)).view((0, 0), (n, n)) * &q;
            let en = linalg::propagator(&nm, t) * &q;
            let e0 = linalg::propagator(&n0, t) * &q;
            Ok(EvolutionError {
                t,
                quantum_vs_n: linalg::op_norm(&(&em - &en)),
                n_vs_n0: linalg::op_norm(&(&en - &e0)),
                quantum_vs_n0: linalg::op_norm(&(&em - &e0)),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Quantum,
    Kinetic,
    KineticN0,
}

/// Trapped fraction f = κ_trap ∫₀^∞ ρ_trap(t) dt = κ_trap (−G⁻¹x₀)_trap.
pub fn efficiency(spec: &NetworkSpec, trap: Trap, p0: &DVector<f64>, model: Model) -> Result<f64> {
    trap.validate(spec)?;
    let n = spec.n();
    if p0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: p0.len(),
        });
    }
    if p0.iter().any(|&p| p < 0.0) || (p0.sum() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(
            "initial populations must be non-negative and sum to 1".into(),
        ));
    }
    let (g, x0) = match model {
        Model::Quantum => {
            let m = assemble_blocks(spec).m();
            (m, population_map(n).transpose() * p0)
        }
        Model::Kinetic => (crate::kinetic::compute_n(spec)?.matrix, p0.clone()),
        Model::KineticN0 => (compute_n0(spec)?.matrix, p0.clone()),
    };
    let max_real = linalg::spectral_abscissa(&g)?;
    if !(max_real < 0.0) {
        return Err(Error::NotHurwitz { max_real });
    }
    let x = GuardedLu::new(&g, "generator")?.solve_vec(&x0);
    Ok(-trap.rate * x[trap.site])
}
