use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use quetron_cli::config::Grid;
use quetron_cli::experiments::{self, default_fmo_grid, default_sizes, dim_scan, fmo_n0, fmo_sweep, scaling_study};
use quetron_core::analysis::{propagate, relaxation_time};
use quetron_core::bounds::{compute_bound_report, lemma_checks, negative_definite_resolvent, perturbed_inverse};
use quetron_core::families::{self, derive_seed, rng_from_seed};
use quetron_core::kinetic::{compute_n, compute_n0, extract_generalized_network, partial_sum};
use quetron_core::liouvillian::{assemble_blocks, assemble_m_direct};
use quetron_core::linalg;
use quetron_core::model::{pack_density, unpack_density};
use quetron_core::{BoundStatus, DensityVector, FamilyKind, Model, NetworkSpec, Probe};
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn rel_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

fn random_real_spec(seed: u64, lossy: bool) -> NetworkSpec {
    let mut rng = rng_from_seed(seed);
    let n = rng.random_range(3..=7);
    families::random_connected(n, 0.4, lossy, &mut rng).unwrap()
}

/// Vectorized Lindblad generator on column-stacked density matrices,
/// built from Kronecker products.
fn kronecker_liouvillian(spec: &NetworkSpec) -> DMatrix<Complex64> {
    let n = spec.n();
    let i = Complex64::new(0.0, 1.0);
    let id = DMatrix::<Complex64>::identity(n, n);
    let mut h = spec.couplings().clone();
    for k in 0..n {
        h[(k, k)] += spec.energies()[k];
    }
    let kappa = DMatrix::from_diagonal(&DVector::from_iterator(
        n,
        spec.loss().iter().map(|&x| Complex64::new(x, 0.0)),
    ));
    let half = Complex64::new(0.5, 0.0);
    let mut l = (id.kronecker(&h) - h.transpose().kronecker(&id)) * (-i);
    l -= (id.kronecker(&kappa) + kappa.kronecker(&id)) * half;
    for k in 0..n {
        let g = spec.dephasing()[k];
        let mut p = DMatrix::<Complex64>::zeros(n, n);
        p[(k, k)] = Complex64::new(1.0, 0.0);
        l += (p.kronecker(&p) - (id.kronecker(&p) + p.kronecker(&id)) * half) * Complex64::new(g, 0.0);
    }
    l
}

fn kronecker_efficiency(spec: &NetworkSpec, site: usize, rate: f64, p0: &DVector<f64>) -> f64 {
    let n = spec.n();
    let l = kronecker_liouvillian(spec);
    let mut rho0 = DVector::<Complex64>::zeros(n * n);
    for k in 0..n {
        rho0[k * (n + 1)] = Complex64::new(-p0[k], 0.0);
    }
    let x = l.lu().solve(&rho0).expect("Liouvillian is invertible with loss");
    rate * x[site * (n + 1)].re
}

fn criterion1() -> Outcome {
    let printed = DMatrix::from_row_slice(
        7,
        7,
        &[
            -80.0, 79.0, 0.0, 0.0, 0.0, 1.0, 0.0, //
            79.0, -82.0, 1.0, 0.0, 0.0, 2.0, 0.0, //
            0.0, 1.0, -58.0, 22.0, 0.0, 0.0, 1.0, //
            0.0, 0.0, 22.0, -88.0, 33.0, 2.0, 31.0, //
            0.0, 0.0, 0.0, 33.0, -52.0, 18.0, 0.0, //
            1.0, 2.0, 0.0, 2.0, 18.0, -31.0, 9.0, //
            0.0, 0.0, 1.0, 31.0, 0.0, 9.0, -41.0,
        ],
    );
    let n0 = fmo_n0(170.0).map_err(err)?;
    let worst = (&n0 - &printed).abs().max();
    ensure(worst <= 0.5, || format!("max entry deviation {worst:.3} cm^-1"))?;
    Ok(format!("max entry deviation {worst:.3} cm^-1"))
}

fn criterion2() -> Outcome {
    let grid = default_fmo_grid();
    let rows = fmo_sweep(&grid.points()).map_err(err)?;
    let best = rows.iter().max_by(|a, b| a.f_m.total_cmp(&b.f_m)).unwrap();
    ensure((100.0..=300.0).contains(&best.gamma), || {
        format!("argmax gamma = {:.3}", best.gamma)
    })?;
    let worst_n = rows.iter().map(|r| r.relerr_n()).fold(0.0, f64::max);
    ensure(worst_n < 0.01, || format!("max relerr_N = {worst_n:.3e}"))?;
    let worst_n0 = rows
        .iter()
        .filter(|r| r.gamma >= 2.0)
        .map(|r| r.relerr_n0())
        .fold(0.0, f64::max);
    ensure(worst_n0 < 0.01, || format!("max relerr_N0 (gamma >= 2) = {worst_n0:.3e}"))?;

    let p0 = families::fmo_initial_populations();
    for gamma in [1.0, 170.0, 1e4] {
        let (spec, trap) = families::fmo(gamma).map_err(err)?;
        let oracle = kronecker_efficiency(&spec, trap.site, trap.rate, &p0);
        let ours = quetron_core::analysis::efficiency(&spec, trap, &p0, Model::Quantum).map_err(err)?;
        ensure((ours - oracle).abs() <= 1e-8 * oracle, || {
            format!("f_M at gamma={gamma}: {ours} vs Kronecker {oracle}")
        })?;
    }
    Ok(format!(
        "argmax gamma = {:.2} (f = {:.4}), max relerr_N = {worst_n:.2e}, max relerr_N0 = {worst_n0:.2e}",
        best.gamma, best.f_m
    ))
}

fn criterion3() -> Outcome {
    let (mut worst_m, mut worst_n) = (0.0f64, 0.0f64);
    for i in 0..100 {
        let spec = random_real_spec(derive_seed(31, i), false);
        let direct = assemble_m_direct(&spec);
        let blocks = assemble_blocks(&spec).m();
        worst_m = worst_m.max(rel_frobenius(&direct, &blocks));
        let extracted = extract_generalized_network(&direct).map_err(err)?.matrix;
        let analytic = compute_n(&spec).map_err(err)?.matrix;
        worst_n = worst_n.max(rel_frobenius(&extracted, &analytic));
    }
    ensure(worst_m < 1e-12, || format!("direct vs blocks {worst_m:.2e}"))?;
    ensure(worst_n < 1e-10, || format!("extracted vs analytic N {worst_n:.2e}"))?;
    Ok(format!("M rel err {worst_m:.2e}, N rel err {worst_n:.2e}"))
}

fn criterion4() -> Outcome {
    let (theta, gamma) = (0.03, 1.7);
    let mut worst = 0.0f64;
    for n in [4usize, 6, 8, 12] {
        let spec = families::highly_connected_ideal(n).unwrap().scaled(theta, gamma).map_err(err)?;
        let norm_a = linalg::op_norm(&assemble_blocks(&spec).a);
        let expected_a = (2.0 * n as f64).sqrt() * theta;
        worst = worst.max((norm_a - expected_a).abs() / expected_a);
        let mu0 = compute_bound_report(&spec).map_err(err)?.mu0;
        let expected_mu0 = 2.0 * n as f64 * theta * theta / gamma;
        worst = worst.max((mu0 - expected_mu0).abs() / expected_mu0);

        let e = 0.6;
        let chain = families::circular_chain_ideal(n, e).unwrap().scaled(theta, gamma).map_err(err)?;
        let n0 = compute_n0(&chain).map_err(err)?.matrix;
        let mut got: Vec<f64> = linalg::symmetric_eigen(&n0).eigenvalues.iter().copied().collect();
        let scale = 4.0 * theta * theta / (gamma * (1.0 + e * e));
        let mut want: Vec<f64> = (0..n)
            .map(|p| -scale * (1.0 - (2.0 * std::f64::consts::PI * p as f64 / n as f64).cos()))
            .collect();
        got.sort_by(f64::total_cmp);
        want.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip(&want) {
            worst = worst.max((g - w).abs() / scale);
        }
    }
    ensure(worst < 1e-12, || format!("worst relative deviation {worst:.2e}"))?;
    Ok(format!("worst relative deviation {worst:.2e}"))
}

fn criterion5() -> Outcome {
    let mut worst_excess = f64::NEG_INFINITY;
    for i in 0..20 {
        let spec = random_real_spec(derive_seed(55, i), true).scaled(1e-2, 1.0).map_err(err)?;
        let blocks = assemble_blocks(&spec);
        let b0c2 = &blocks.b0 + &blocks.c2;
        let reference = linalg::op_norm(&(&blocks.nu * linalg::inverse_guarded(&b0c2, "b0 + c2").map_err(err)?));
        let exact = compute_n(&spec).map_err(err)?.matrix;
        let floor = 1e3 * f64::EPSILON * exact.norm();
        let pts: Vec<(f64, f64)> = (0..=6)
            .map(|k| (k as f64, (partial_sum(&spec, k).unwrap().matrix - &exact).norm()))
            .filter(|&(_, e)| e > floor)
            .map(|(k, e)| (k, e.ln()))
            .collect();
        ensure(pts.len() >= 3, || format!("spec {i}: only {} usable orders", pts.len()))?;
        let m = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
        let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        let ratio = slope.exp();
        ensure(ratio <= reference + 0.05, || {
            format!("spec {i}: fitted ratio {ratio:.3e} > {reference:.3e} + 0.05")
        })?;
        worst_excess = worst_excess.max(ratio - reference);
    }
    Ok(format!("max(fitted ratio - reference) = {worst_excess:.2e}"))
}

fn criterion6() -> Outcome {
    let mut tallies = [[0usize; 2]; 4];
    let mut record = |checks: &[quetron_core::BoundCheck]| -> Result<(), String> {
        for (i, c) in checks.iter().enumerate() {
            match &c.status {
                BoundStatus::Fail => {
                    return Err(format!(
                        "{} violated: measured {:.3e} > bound {:.3e}",
                        c.theorem, c.measured, c.bound
                    ))
                }
                BoundStatus::Pass => tallies[i][0] += 1,
                BoundStatus::Skipped(_) => tallies[i][1] += 1,
            }
        }
        Ok(())
    };
    for (_, checks) in experiments::random_audit(100, 1e-3, 2024).map_err(err)? {
        record(&checks)?;
    }
    let mut ideal = Vec::new();
    for n in [4, 6, 8] {
        ideal.push(families::highly_connected_ideal(n).unwrap().scaled(1e-3, 1.0).map_err(err)?);
        ideal.push(families::circular_chain_ideal(n, 1.0).unwrap().scaled(1e-3, 1.0).map_err(err)?);
    }
    for spec in &ideal {
        let checks = experiments::audit_spec(spec).map_err(err)?;
        ensure(checks.iter().all(|c| c.status == BoundStatus::Pass), || {
            format!("ideal n={} not fully checked: {:?}", spec.n(), checks.iter().map(|c| c.status.to_string()).collect::<Vec<_>>())
        })?;
        record(&checks)?;
    }
    for i in 0..10 {
        let spec = random_real_spec(derive_seed(66, i), false).scaled(1e-3, 1.0).map_err(err)?;
        if let Some(p) = lemma_checks(&spec, 8).map_err(err)?.into_iter().find(|p| !p.holds()) {
            return Err(format!("{} fails at z = {}", p.lemma, p.z));
        }
    }
    for (i, [pass, _]) in tallies.iter().enumerate() {
        ensure(*pass >= 50, || format!("only {pass} passing checks for bound {i}"))?;
    }
    Ok(format!("no violations; (pass, skipped) per bound = {tallies:?}"))
}

fn criterion7() -> Outcome {
    let grid = Grid::new(1e-4, 1e-2, 9).unwrap().points();
    let cases = [
        (FamilyKind::HighlyIdeal, 5, 0.0, 2.0),
        (FamilyKind::HighlyRandom, 5, 0.0, 1.0),
        (FamilyKind::ChainIdeal, 6, 1.0, 2.0),
        (FamilyKind::ChainRandom, 6, 0.0, 2.0),
    ];
    let mut report = Vec::new();
    for (kind, n, e, expected) in cases {
        let family = kind.family(n, e, 0, grid[0], 1.0).map_err(err)?;
        let study = scaling_study(&family, &grid, Probe::Site(0)).map_err(err)?;
        let fit = study.quantum_vs_n0.map_err(err)?;
        ensure(fit.used >= 8, || format!("{kind}: only {} fitted points", fit.used))?;
        ensure((fit.slope - expected).abs() <= 0.3, || {
            format!("{kind}: slope {:.3}, expected {expected} +- 0.3", fit.slope)
        })?;
        report.push(format!("{kind} {:.3}", fit.slope));
    }
    Ok(report.join(", "))
}

fn criterion8() -> Outcome {
    let scan = dim_scan(FamilyKind::HighlyIdeal, &default_sizes(FamilyKind::HighlyIdeal), 0.01, 1.0, 0.0, 0)
        .map_err(err)?;
    let slope = scan.fit.as_ref().map_err(err)?.slope;
    ensure((slope - 2.0).abs() <= 0.4, || format!("highly-ideal slope {slope:.3}"))?;
    let chain = dim_scan(FamilyKind::ChainIdeal, &default_sizes(FamilyKind::ChainIdeal), 0.01, 1.0, 1.0, 0)
        .map_err(err)?;
    ensure(chain.sizes.last() == Some(&40), || "chain scan must reach n = 40".into())?;
    let local = chain.local_slopes();
    ensure(local.windows(2).all(|w| w[1] <= w[0] + 1e-9), || {
        format!("chain local slopes not non-increasing: {local:?}")
    })?;
    let last = *local.last().unwrap();
    ensure(last < 0.5, || format!("chain slope at n = 40 is {last:.3}"))?;
    Ok(format!(
        "highly-ideal slope {slope:.3}; chain local slope {:.3} -> {last:.3}",
        local[0]
    ))
}

fn random_hermitian(n: usize, rng: &mut impl Rng) -> DMatrix<Complex64> {
    let a = DMatrix::from_fn(n, n, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    (&a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

fn rk4(m: &DMatrix<f64>, x0: &DVector<f64>, t: f64, steps: usize) -> DVector<f64> {
    let h = t / steps as f64;
    let mut x = x0.clone();
    for _ in 0..steps {
        let k1 = m * &x;
        let k2 = m * (&x + &k1 * (h / 2.0));
        let k3 = m * (&x + &k2 * (h / 2.0));
        let k4 = m * (&x + &k3 * h);
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    x
}

fn criterion9() -> Outcome {
    let mut rng = rng_from_seed(99);
    for _ in 0..50 {
        let n = rng.random_range(2..=7);
        let rho = random_hermitian(n, &mut rng);
        let v = pack_density(&rho).map_err(err)?;
        ensure((v.as_vector().norm() - rho.norm()).abs() < 1e-12, || "codec is not an isometry".into())?;
        ensure((unpack_density(&v) - &rho).norm() < 1e-12, || "unpack . pack != id".into())?;
        let w = DVector::from_fn(n * n, |_, _| rng.random::<f64>() - 0.5);
        let dv = DensityVector::from_vector(n, w.clone()).map_err(err)?;
        let back = pack_density(&unpack_density(&dv)).map_err(err)?;
        ensure((back.as_vector() - &w).norm() < 1e-12, || "pack . unpack != id".into())?;
    }
    let mut worst_rk4 = 0.0f64;
    for i in 0..30 {
        let spec = random_real_spec(derive_seed(77, i), false).scaled(0.3, 1.0).map_err(err)?;
        let n = spec.n();
        let kinetic = [
            (compute_n(&spec).map_err(err)?.matrix, false),
            (compute_n0(&spec).map_err(err)?.matrix, true),
        ];
        for (g, proper) in kinetic {
            let scale = g.abs().max();
            ensure(g.row_sum().abs().max() < 1e-12 * scale, || "column sums of generator are not zero".into())?;
            let off_negative = (0..n).any(|r| (0..n).any(|c| r != c && g[(r, c)] < 0.0));
            ensure(!(proper && off_negative), || "negative off-diagonal rate in N0".into())?;
            ensure(linalg::is_symmetric(&g, 1e-12), || "loss-free rate matrix is not symmetric".into())?;
            let restricted = linalg::restrict(&g);
            let top = linalg::symmetric_eigen(&restricted).eigenvalues.max();
            ensure(top < 0.0, || format!("generator not negative definite on I: {top:.3e}"))?;
            ensure(relaxation_time(&g).map_err(err)? > 0.0, || "non-positive relaxation time".into())?;

            let z = Complex64::new(rng.random::<f64>(), 4.0 * (rng.random::<f64>() - 0.5));
            let (res, inv_c, inv_z) = negative_definite_resolvent(&restricted, z).map_err(err)?;
            ensure(res <= inv_c.min(inv_z) * (1.0 + 1e-12), || "resolvent bound violated".into())?;
            let a = -DMatrix::<f64>::identity(n, n) + g.clone() * 0.1;
            let pert = DMatrix::from_fn(n, n, |_, _| 0.05 * (rng.random::<f64>() - 0.5));
            if let Some((measured, bound)) = perturbed_inverse(&a, &pert).map_err(err)? {
                ensure(measured <= bound, || "perturbed inverse bound violated".into())?;
            }
        }
        let m = assemble_blocks(&spec).m();
        let p = DVector::from_fn(n, |_, _| rng.random::<f64>());
        let x0 = DensityVector::from_populations(&(&p / p.sum()));
        let t = 2.0;
        let exact = propagate(&m, &x0, t).map_err(err)?;
        ensure((exact.populations().sum() - 1.0).abs() < 1e-12, || "population not conserved".into())?;
        let approx = rk4(&m, x0.as_vector(), t, 4000);
        worst_rk4 = worst_rk4.max((exact.as_vector() - approx).norm());
    }
    ensure(worst_rk4 < 1e-8, || format!("propagator vs RK4 {worst_rk4:.2e}"))?;
    Ok(format!("all properties hold; propagator vs RK4 {worst_rk4:.2e}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("1 FMO N0 matrix", criterion1, Duration::from_secs(1)),
        ("2 FMO efficiency sweep", criterion2, Duration::from_secs(120)),
        ("3 oracle equivalence", criterion3, Duration::from_secs(30)),
        ("4 closed forms", criterion4, Duration::from_secs(5)),
        ("5 series convergence", criterion5, Duration::from_secs(10)),
        ("6 bound audit", criterion6, Duration::from_secs(300)),
        ("7 scaling slopes", criterion7, Duration::from_secs(300)),
        ("8 dimension scan", criterion8, Duration::from_secs(600)),
        ("9 property suites", criterion9, Duration::from_secs(60)),
    ];
    let mut failed = 0;
    for (name, run, limit) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let verdict = match outcome {
            Ok(detail) if elapsed <= limit => Ok(detail),
            Ok(detail) => Err(format!("{detail}; runtime {elapsed:.2?} exceeds {limit:?}")),
            Err(e) => Err(e),
        };
        match verdict {
            Ok(detail) => println!("PASS criterion {name} ({elapsed:.2?}): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {name} ({elapsed:.2?}): {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
