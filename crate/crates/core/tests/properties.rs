use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;
use quetron_core::families::{random_connected, rng_from_seed};
use quetron_core::kinetic::{compute_n, compute_n0, compute_n_tilde};
use quetron_core::liouvillian::{assemble_blocks, population_map};
use quetron_core::model::{pack_density, unpack_density};
use quetron_core::model::SpecFile;
use quetron_core::{linalg, DensityVector, Error, NetworkSpec};

fn hermitian(n: usize, entries: &[(f64, f64)]) -> DMatrix<Complex64> {
    let a = DMatrix::from_fn(n, n, |i, j| {
        let (re, im) = entries[i * n + j];
        Complex64::new(re, im)
    });
    (&a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

proptest! {
    #[test]
    fn codec_round_trip_and_isometry(n in 1usize..7, raw in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 49)) {
        let rho = hermitian(n, &raw);
        let v = pack_density(&rho).unwrap();
        prop_assert!((v.as_vector().norm() - rho.norm()).abs() < 1e-12);
        prop_assert!((unpack_density(&v) - &rho).norm() < 1e-12);
        prop_assert!((v.populations() - rho.diagonal().map(|z| z.re)).norm() < 1e-15);
    }

    #[test]
    fn loss_free_dynamics_preserve_trace(seed in 0u64..500, theta in 1e-3f64..1.0) {
        let mut rng = rng_from_seed(seed);
        let spec = random_connected(4, 0.5, false, &mut rng).unwrap().scaled(theta, 1.0).unwrap();
        let m = assemble_blocks(&spec).m();
        let trace_row = DVector::from_iterator(16, (0..16).map(|i| if i < 4 { 1.0 } else { 0.0 }));
        prop_assert!((m.transpose() * trace_row).norm() < 1e-13);
    }

    #[test]
    fn tilde_route_agrees(seed in 0u64..500) {
        let mut rng = rng_from_seed(seed);
        let spec = random_connected(5, 0.4, true, &mut rng).unwrap().scaled(0.05, 1.0).unwrap();
        let n = compute_n(&spec).unwrap().matrix;
        let nt = compute_n_tilde(&spec).unwrap().matrix;
        prop_assert!((n - &nt).norm() <= 1e-11 * nt.norm());
    }
}

#[test]
fn population_map_embeds_populations() {
    let p = DVector::from_vec(vec![0.2, 0.3, 0.5]);
    let x = population_map(3).transpose() * &p;
    assert_eq!(DensityVector::from_populations(&p).as_vector(), &x);
}

#[test]
fn spec_file_round_trip() {
    let mut rng = rng_from_seed(4);
    let spec = random_connected(5, 0.5, true, &mut rng).unwrap();
    let text = SpecFile::from_spec(&spec, None).to_toml().unwrap();
    let (back, trap) = SpecFile::parse(&text).unwrap().to_spec().unwrap();
    assert!(trap.is_none());
    assert_eq!(back, spec);
}

#[test]
fn non_hermitian_couplings_rejected() {
    let mut v = DMatrix::<Complex64>::zeros(2, 2);
    v[(0, 1)] = Complex64::new(1.0, 0.0);
    v[(1, 0)] = Complex64::new(0.5, 0.0);
    let r = NetworkSpec::new(vec![0.0, 1.0], v, vec![1.0, 1.0], vec![0.0, 0.0]);
    assert!(matches!(r, Err(Error::NotHermitian { row: 0, col: 1, .. }) | Err(Error::NotHermitian { row: 1, col: 0, .. })));
}

#[test]
fn zero_pair_rate_is_reported() {
    let v = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    let spec = NetworkSpec::real(vec![0.0, 0.0], v, vec![0.0, 0.0], vec![0.0, 0.0]).unwrap();
    assert!(matches!(compute_n0(&spec), Err(Error::SingularRate { k: 1, l: 2 })));
}

#[test]
fn n0_is_symmetric_laplacian_for_real_loss_free() {
    let mut rng = rng_from_seed(12);
    let spec = random_connected(6, 0.3, false, &mut rng).unwrap();
    let n0 = compute_n0(&spec).unwrap();
    assert!(n0.is_symmetric(1e-14));
    assert!(n0.column_sums().iter().all(|s| s.abs() < 1e-14));
    let top = linalg::symmetric_eigen(&linalg::restrict(&n0.matrix)).eigenvalues.max();
    assert!(top < 0.0);
}
