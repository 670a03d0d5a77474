//! Experiment drivers behind each subcommand.

use std::fs;
use std::path::PathBuf;

use nalgebra::DMatrix;
use quetron_core::analysis::{
    efficiency, evolution_error, kinetic_relaxation_metrics, relaxation_metrics, KineticRelaxation,
};
use quetron_core::bounds::{
    check_evolution_bounds, check_grid_span, compute_bound_report, default_time_grid, fit_log_slope,
    SlopeFit, SlopePoint,
};
use quetron_core::families::{self, derive_seed, rng_from_seed};
use quetron_core::kinetic::{compute_n0, compute_nk, n_from_blocks};
use quetron_core::liouvillian::assemble_blocks;
use quetron_core::model::{is_connected, SpecFile};
use quetron_core::{
    BoundCheck, BoundStatus, Error, FamilyKind, Model, NetworkSpec, Probe, ScalingFamily, SlopeStudy, Trap,
};
use rand::Rng;
use rayon::prelude::*;

use crate::config::{Command, ExperimentConfig, Grid};
use crate::output::{Cell, OutputDir};
use crate::CliError;

/// Dephasing at which the FMO rate matrix is reported.
pub const FMO_REPORT_GAMMA: f64 = 170.0;

#[derive(Debug, Default)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub lines: Vec<String>,
    pub bound_failure: bool,
}

impl RunSummary {
    fn note(&mut self, line: impl Into<String>) {
        self.lines.push(line.into());
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunSummary, CliError> {
    cfg.validate()?;
    match cfg.command {
        Command::Simulate => run_simulate(cfg),
        Command::FmoSweep => run_fmo_sweep(cfg),
        Command::IdealNetwork => run_scaling(cfg, &[FamilyKind::HighlyIdeal, FamilyKind::HighlyRandom], 5),
        Command::Chain => run_scaling(cfg, &[FamilyKind::ChainIdeal, FamilyKind::ChainRandom], 6),
        Command::DimScan => run_dim_scan(cfg),
        Command::BoundsReport => run_bounds_report(cfg),
    }
}

fn load_spec_file(path: &PathBuf) -> Result<(NetworkSpec, Option<Trap>), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let parsed = SpecFile::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok(parsed.to_spec()?)
}

fn family_spec(cfg: &ExperimentConfig, default: FamilyKind, default_n: usize, default_theta: f64) -> Result<(NetworkSpec, String), CliError> {
    let kind = cfg.family.unwrap_or(default);
    let n = cfg.n.unwrap_or(default_n);
    let theta = cfg.theta.unwrap_or(default_theta);
    let gamma = cfg.gamma.unwrap_or(1.0);
    let e = default_e(cfg, kind);
    let spec = kind.family(n, e, cfg.seed, theta, gamma)?.instantiate()?;
    Ok((spec, format!("{kind}_n{n}")))
}

fn default_e(cfg: &ExperimentConfig, kind: FamilyKind) -> f64 {
    match kind {
        FamilyKind::ChainIdeal => cfg.e.unwrap_or(1.0),
        _ => cfg.e.unwrap_or(0.0),
    }
}

fn run_simulate(cfg: &ExperimentConfig) -> Result<RunSummary, CliError> {
    let (spec, trap, label) = match &cfg.spec_path {
        Some(p) => {
            let (s, t) = load_spec_file(p)?;
            (s, t, "spec".to_string())
        }
        None => {
            let (s, l) = family_spec(cfg, FamilyKind::HighlyIdeal, 4, 1e-2)?;
            (s, None, l)
        }
    };
    let out = OutputDir::create(&cfg.out, &cfg.hash())?;
    let mut summary = RunSummary::default();
    let blocks = assemble_blocks(&spec);
    let m = blocks.m();
    let n_mat = n_from_blocks(&blocks)?.matrix;

    let mut kv = format!("source = {label}\nn = {}\n", spec.n());
    if spec.is_loss_free() && is_connected(&spec) {
        let r = relaxation_metrics(&spec, Probe::OperatorNorm)?;
        for (k, v) in [
            ("tau", r.tau),
            ("tau0", r.tau0),
            ("mu", r.mu),
            ("mu0", r.mu0),
            ("dtau", r.dtau),
            ("dtau0", r.dtau0),
            ("dtau1", r.dtau1),
            ("dtau_rel", r.dtau_rel),
            ("dtau0_rel", r.dtau0_rel),
            ("dtau1_rel", r.dtau1_rel),
        ] {
            kv.push_str(&format!("{k} = {v:.16e}\n"));
        }
        summary.note(format!("tau = {:.6e}, dtau0_rel = {:.6e}", r.tau, r.dtau0_rel));
    } else {
        kv.push_str("relaxation = skipped (needs a loss-free connected network)\n");
    }
    if let Some(trap) = trap {
        let p0 = initial_populations(&spec);
        for (key, model) in [("f_M", Model::Quantum), ("f_N", Model::Kinetic), ("f_N0", Model::KineticN0)] {
            let f = efficiency(&spec, trap, &p0, model)?;
            kv.push_str(&format!("{key} = {f:.16e}\n"));
            summary.note(format!("{key} = {f:.6}"));
        }
    }
    summary.files.push(out.write_text("summary.txt", &kv)?);

    if let Some(grid) = cfg.grid {
        let rows: Vec<Vec<Cell>> = evolution_error(&spec, &grid.points())?
            .into_iter()
            .map(|e| vec![e.t.into(), e.quantum_vs_n.into(), e.n_vs_n0.into(), e.quantum_vs_n0.into()])
            .collect();
        summary.files.push(out.write_table(
            "evolution.csv",
            &["t", "err_quantum_vs_N", "err_N_vs_N0", "err_quantum_vs_N0"],
            &rows,
        )?);
    }
    if cfg.dumps.m {
        summary.files.push(out.write_matrix("M.csv", &m)?);
    }
    if cfg.dumps.n {
        summary.files.push(out.write_matrix("N.csv", &n_mat)?);
    }
    if cfg.dumps.n0 {
        summary.files.push(out.write_matrix("N0.csv", &compute_n0(&spec)?.matrix)?);
    }
    if let Some(k) = cfg.dumps.nk {
        summary.files.push(out.write_matrix(&format!("N{k}_term.csv"), &compute_nk(&spec, k)?.matrix)?);
    }
    Ok(summary)
}

/// Uniform initial populations unless the network is the FMO monomer size.
fn initial_populations(spec: &NetworkSpec) -> nalgebra::DVector<f64> {
    if spec.n() == 7 {
        families::fmo_initial_populations()
    } else {
        nalgebra::DVector::from_element(spec.n(), 1.0 / spec.n() as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FmoRow {
    pub gamma: f64,
    pub f_m: f64,
    pub f_n: f64,
    pub f_n0: f64,
}

impl FmoRow {
    pub fn relerr_n(&self) -> f64 {
        (self.f_n - self.f_m).abs() / self.f_m
    }

    pub fn relerr_n0(&self) -> f64 {
        (self.f_n0 - self.f_m).abs() / self.f_m
    }
}

pub fn default_fmo_grid() -> Grid {
    Grid {
        lo: 1e-3,
        hi: 1e5,
        count: 81,
    }
}

pub fn fmo_sweep(gammas: &[f64]) -> Result<Vec<FmoRow>, CliError> {
    let p0 = families::fmo_initial_populations();
    gammas
        .par_iter()
        .map(|&gamma| {
            let (spec, trap) = families::fmo(gamma)?;
            Ok(FmoRow {
                gamma,
                f_m: efficiency(&spec, trap, &p0, Model::Quantum)?,
                f_n: efficiency(&spec, trap, &p0, Model::Kinetic)?,
                f_n0: efficiency(&spec, trap, &p0, Model::KineticN0)?,
            })
        })
        .collect()
}

pub fn fmo_n0(gamma: f64) -> Result<DMatrix<f64>, CliError> {
    let (spec, _) = families::fmo(gamma)?;
    Ok(compute_n0(&spec)?.matrix)
}

fn run_fmo_sweep(cfg: &ExperimentConfig) -> Result<RunSummary, CliError> {
    let grid = cfg.grid.unwrap_or_else(default_fmo_grid);
    let rows = fmo_sweep(&grid.points())?;
    let out = OutputDir::create(&cfg.out, &cfg.hash())?;
    let mut summary = RunSummary::default();
    let table: Vec<Vec<Cell>> = rows
        .iter()
        .map(|r| {
            vec![
                r.gamma.into(),
                r.f_m.into(),
                r.f_n.into(),
                r.f_n0.into(),
                r.relerr_n().into(),
                r.relerr_n0().into(),
            ]
        })
        .collect();
    summary.files.push(out.write_table(
        "fmo_sweep.csv",
        &["gamma", "f_M", "f_N", "f_N0", "relerr_N", "relerr_N0"],
        &table,
    )?);
    summary
        .files
        .push(out.write_matrix("fmo_N0_gamma170.csv", &fmo_n0(FMO_REPORT_GAMMA)?)?);
    let best = rows
        .iter()
        .max_by(|a, b| a.f_m.total_cmp(&b.f_m))
        .expect("grid has at least two points");
    summary.note(format!("peak f_M = {:.6} at gamma = {:.4} cm^-1", best.f_m, best.gamma));
    let worst_n = rows.iter().map(FmoRow::relerr_n).fold(0.0, f64::max);
    summary.note(format!("max relerr_N = {worst_n:.3e}"));
    Ok(summary)
}

/// Relative relaxation errors over a Θ grid, computed in parallel and
/// gathered in grid order.
pub fn scaling_study(family: &ScalingFamily, thetas: &[f64], probe: Probe) -> Result<SlopeStudy, CliError> {
    check_grid_span(thetas, family.gamma)?;
    let points = thetas
        .par_iter()
        .map(|&theta| {
            let spec = family.at(theta, family.gamma)?;
            Ok(SlopePoint {
                theta_over_gamma: theta / family.gamma,
                metrics: relaxation_metrics(&spec, probe)?,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    Ok(SlopeStudy::from_points(points))
}

fn slope_rows(channels: &[(&str, &Result<SlopeFit, Error>)]) -> Vec<Vec<Cell>> {
    channels
        .iter()
        .map(|(name, fit)| match fit {
            Ok(f) => vec![
                (*name).into(),
                f.slope.into(),
                f.intercept.into(),
                f.rms_residual.into(),
                f.used.into(),
                "ok".into(),
            ],
            Err(e) => vec![
                (*name).into(),
                f64::NAN.into(),
                f64::NAN.into(),
                f64::NAN.into(),
                Cell::Int(0),
                e.to_string().replace(',', ";").into(),
            ],
        })
        .collect()
}

const SLOPE_COLUMNS: [&str; 6] = ["channel", "slope", "intercept", "rms_residual", "points_used", "status"];

fn run_scaling(cfg: &ExperimentConfig, allowed: &[FamilyKind], default_n: usize) -> Result<RunSummary, CliError> {
    if cfg.spec_path.is_some() {
        return Err(CliError::Usage(format!("{} works on built-in families only", cfg.command.name())));
    }
    let kind = cfg.family.unwrap_or(allowed[0]);
    if !allowed.contains(&kind) {
        return Err(CliError::Usage(format!(
            "{} supports families {}",
            cfg.command.name(),
            allowed.iter().map(|k| k.name()).collect::<Vec<_>>().join(", ")
        )));
    }
    let n = cfg.n.unwrap_or(default_n);
    let gamma = cfg.gamma.unwrap_or(1.0);
    let grid = cfg.grid.unwrap_or(Grid {
        lo: 1e-4 * gamma,
        hi: 1e-2 * gamma,
        count: 9,
    });
    let family = kind.family(n, default_e(cfg, kind), cfg.seed, grid.lo, gamma)?;
    let study = scaling_study(&family, &grid.points(), Probe::Site(0))?;

    let out = OutputDir::create(&cfg.out, &cfg.hash())?;
    let mut summary = RunSummary::default();
    let stem = format!("{kind}_n{n}");
    let rows: Vec<Vec<Cell>> = study
        .points
        .iter()
        .map(|p| {
            vec![
                p.theta_over_gamma.into(),
                p.metrics.dtau_rel.into(),
                p.metrics.dtau0_rel.into(),
                p.metrics.dtau1_rel.into(),
            ]
        })
        .collect();
    summary.files.push(out.write_table(
        &format!("{stem}_scaling.csv"),
        &["theta_over_gamma", "dtau_rel_M_N", "dtau0_rel_M_N0", "dtau1_rel_N_N0"],
        &rows,
    )?);
    let channels = [
        ("M-N", &study.quantum_vs_n),
        ("M-N0", &study.quantum_vs_n0),
        ("N-N0", &study.n_vs_n0),
    ];
    summary
        .files
        .push(out.write_table(&format!("{stem}_slopes.csv"), &SLOPE_COLUMNS, &slope_rows(&channels))?);
    let base = SpecFile::from_spec(&family.base, None).to_toml()?;
    summary
        .files
        .push(out.write_text(&format!("{stem}_base_network.toml"), &base)?);
    for (name, fit) in channels {
        match fit {
            Ok(f) => summary.note(format!("{name}: slope {:.4} ({} points)", f.slope, f.used)),
            Err(e) => summary.note(format!("{name}: {e}")),
        }
    }
    if kind.is_random() {
        let gaps: Vec<f64> = quetron_core::model::pairs(n)
            .filter(|&(k, l)| family.base.coupling(k, l).norm() != 0.0)
            .map(|(k, l)| family.base.pair_energy(k, l).abs())
            .collect();
        let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
        let max = gaps.iter().copied().fold(0.0, f64::max);
        summary.note(format!("coupled |E_kl|/gamma: mean {mean:.4}, max {max:.4}"));
    }
    Ok(summary)
}

pub fn default_sizes(kind: FamilyKind) -> Vec<usize> {
    match kind {
        FamilyKind::ChainIdeal | FamilyKind::ChainRandom => (6..=40).step_by(2).collect(),
        _ => (4..=16).collect(),
    }
}

pub struct DimScan {
    pub sizes: Vec<usize>,
    pub values: Vec<KineticRelaxation>,
    pub fit: Result<SlopeFit, Error>,
}

impl DimScan {
    /// Slopes between consecutive sizes in log-log coordinates.
    pub fn local_slopes(&self) -> Vec<f64> {
        self.sizes
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(n, v)| (v[1].dtau1_rel / v[0].dtau1_rel).ln() / (n[1] as f64 / n[0] as f64).ln())
            .collect()
    }
}

pub fn dim_scan(kind: FamilyKind, sizes: &[usize], theta: f64, gamma: f64, e: f64, seed: u64) -> Result<DimScan, CliError> {
    let values = sizes
        .par_iter()
        .map(|&n| {
            let spec = kind.family(n, e, seed, theta, gamma)?.instantiate()?;
            kinetic_relaxation_metrics(&spec, Probe::OperatorNorm)
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let xs: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.dtau1_rel).collect();
    Ok(DimScan {
        sizes: sizes.to_vec(),
        values,
        fit: fit_log_slope(&xs, &ys),
    })
}

fn run_dim_scan(cfg: &ExperimentConfig) -> Result<RunSummary, CliError> {
    let kind = cfg.family.unwrap_or(FamilyKind::HighlyIdeal);
    if !matches!(kind, FamilyKind::HighlyIdeal | FamilyKind::ChainIdeal) {
        return Err(CliError::Usage("dim-scan supports highly-ideal and chain-ideal".into()));
    }
    let sizes = cfg.sizes.clone().unwrap_or_else(|| default_sizes(kind));
    let theta = cfg.theta.unwrap_or(0.01);
    let gamma = cfg.gamma.unwrap_or(1.0);
    let scan = dim_scan(kind, &sizes, theta, gamma, default_e(cfg, kind), cfg.seed)?;

    let out = OutputDir::create(&cfg.out, &cfg.hash())?;
    let mut summary = RunSummary::default();
    let local = scan.local_slopes();
    let rows: Vec<Vec<Cell>> = scan
        .sizes
        .iter()
        .zip(&scan.values)
        .enumerate()
        .map(|(i, (&n, v))| {
            let slope = if i == 0 { f64::NAN } else { local[i - 1] };
            vec![n.into(), v.dtau1_rel.into(), v.tau.into(), v.tau0.into(), slope.into()]
        })
        .collect();
    summary.files.push(out.write_table(
        &format!("dim_scan_{kind}.csv"),
        &["n", "dtau1_rel", "tau", "tau0", "local_slope"],
        &rows,
    )?);
    summary.files.push(out.write_table(
        &format!("dim_scan_{kind}_slopes.csv"),
        &SLOPE_COLUMNS,
        &slope_rows(&[("N-N0", &scan.fit)]),
    )?);
    let fit = scan.fit?;
    summary.note(format!("N-N0 slope vs n: {:.4}", fit.slope));
    Ok(summary)
}

fn check_rows(label: &str, n: usize, checks: &[BoundCheck]) -> Vec<Vec<Cell>> {
    checks
        .iter()
        .map(|c| {
            let unmet: Vec<&str> = c.hypotheses.iter().filter(|h| !h.holds).map(|h| h.name).collect();
            vec![
                label.into(),
                n.into(),
                c.theorem.name().into(),
                match &c.status {
                    BoundStatus::Skipped(_) => "skipped".into(),
                    s => s.to_string().into(),
                },
                c.measured.into(),
                c.bound.into(),
                c.margin().into(),
                match &c.status {
                    BoundStatus::Skipped(why) => why.replace(',', ";").into(),
                    _ => unmet.join("; ").into(),
                },
            ]
        })
        .collect()
}

const CHECK_COLUMNS: [&str; 8] = ["case", "n", "theorem", "status", "measured", "bound", "margin", "note"];

/// Every bound check on one spec: the relaxation pair followed by the
/// evolution pair on the default time grid.
pub fn audit_spec(spec: &NetworkSpec) -> Result<Vec<BoundCheck>, CliError> {
    let mut checks = quetron_core::bounds::check_relaxation_bounds(spec)?;
    match compute_bound_report(spec) {
        Ok(report) => {
            let times = default_time_grid(&report, spec);
            checks.extend(check_evolution_bounds(spec, &times)?);
        }
        Err(Error::Precondition(_)) => checks.extend(check_evolution_bounds(spec, &[])?),
        Err(e) => return Err(e.into()),
    }
    Ok(checks)
}

/// Randomized audit over connected real networks with n ∈ 3..=7.
pub fn random_audit(draws: usize, theta: f64, seed: u64) -> Result<Vec<(usize, Vec<BoundCheck>)>, CliError> {
    (0..draws)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(derive_seed(seed, i as u64));
            let n = rng.random_range(3..=7);
            let spec = families::random_connected(n, 0.3, false, &mut rng)?.scaled(theta, 1.0)?;
            Ok((n, audit_spec(&spec)?))
        })
        .collect()
}

fn run_bounds_report(cfg: &ExperimentConfig) -> Result<RunSummary, CliError> {
    let out = OutputDir::create(&cfg.out, &cfg.hash())?;
    let mut summary = RunSummary::default();
    let mut rows = Vec::new();
    let mut failures = 0;
    let mut tally = |checks: &[BoundCheck], summary: &mut RunSummary| {
        for c in checks {
            if c.status == BoundStatus::Fail {
                failures += 1;
                summary.bound_failure = true;
            }
        }
    };

    if let Some(draws) = cfg.draws {
        let theta = cfg.theta.unwrap_or(1e-3);
        let results = random_audit(draws, theta, cfg.seed)?;
        let mut skipped = 0;
        for (i, (n, checks)) in results.iter().enumerate() {
            tally(checks, &mut summary);
            skipped += checks.iter().filter(|c| matches!(c.status, BoundStatus::Skipped(_))).count();
            rows.extend(check_rows(&format!("draw{i}"), *n, checks));
        }
        summary.note(format!("{draws} draws, {} checks skipped, {failures} violations", skipped));
        summary.files.push(out.write_table("bound_audit.csv", &CHECK_COLUMNS, &rows)?);
        return Ok(summary);
    }

    let (spec, label) = match &cfg.spec_path {
        Some(p) => (load_spec_file(p)?.0, "spec".to_string()),
        None => family_spec(cfg, FamilyKind::HighlyIdeal, 4, 1e-3)?,
    };
    let checks = audit_spec(&spec)?;
    tally(&checks, &mut summary);
    let report_text = match compute_bound_report(&spec) {
        Ok(r) => r.to_key_value(),
        Err(Error::Precondition(why)) => format!("status = {why}\n"),
        Err(e) => return Err(e.into()),
    };
    summary.files.push(out.write_text("bound_report.txt", &report_text)?);
    rows.extend(check_rows(&label, spec.n(), &checks));
    summary.files.push(out.write_table("bound_checks.csv", &CHECK_COLUMNS, &rows)?);
    for c in &checks {
        summary.note(format!("{}: {} (margin {:.3e})", c.theorem, c.status, c.margin()));
    }
    Ok(summary)
}
