use std::f64::consts::PI;

use magnomech_core::gaussian::{
    partial_transpose, reduce, symplectic_eigenvalues, symplectic_eigenvalues_sigma_y,
};
use magnomech_core::lyapunov::{
    lyapunov_integral_oracle, lyapunov_residual, random_stable_system, solve_lyapunov,
    RESIDUAL_REL_TOL,
};
use magnomech_core::model::{
    build_diffusion, build_drift, is_stable, steady_state, steady_state_oracle,
};
use magnomech_core::sweep::{analyze, run_sweep, Measure};
use magnomech_core::*;
use nalgebra::{Complex, DMatrix};
use proptest::prelude::*;

fn w(hz: f64) -> f64 {
    2.0 * PI * hz
}

fn driven(psi_hz: f64) -> PhysicalParams {
    let omega_b = w(10e6);
    let omega_drive = w(10e9);
    PhysicalParams {
        omega_c: omega_drive - omega_b,
        omega_m1: omega_drive + 0.9 * omega_b,
        omega_m2: omega_drive - omega_b,
        omega_b,
        omega_drive,
        delta_b: 0.2 * omega_b,
        kappa_c: w(1e6),
        kappa_m1: w(10e6),
        kappa_m2: w(10e6),
        gamma_b: w(100.0),
        g1: w(3.2e6),
        g2: w(2.6e6),
        j: w(3.2e6),
        g0: w(0.3),
        drive: CouplingDrive::Rabi(w(psi_hz)),
        temperature: 0.01,
    }
}

fn direct() -> PhysicalParams {
    let mut p = driven(0.0);
    p.drive = CouplingDrive::Direct(w(4.8e6));
    p
}

fn covariance(p: &PhysicalParams) -> CovarianceMatrix {
    analyze(p)
        .unwrap()
        .covariance
        .expect("stable configuration")
}

/// Far-detuned amplitudes written out independently of the library.
fn far_detuned(p: &PhysicalParams, psi: f64, x: f64) -> (Complex<f64>, Complex<f64>, Complex<f64>) {
    let i = Complex::new(0.0, 1.0);
    let dc = p.omega_c - p.omega_drive;
    let d1 = p.omega_m1 - p.omega_drive + p.g0 * x + p.delta_b;
    let d2 = p.omega_m2 - p.omega_drive;
    let (g1, g2, j) = (p.g1, p.g2, p.j);
    let c = i * psi * (g1 * d2 - g2 * j)
        / (dc * d1 * d2 - j * j * dc - g1 * g1 * d2 - g2 * g2 * d1 + 2.0 * j * g1 * g2);
    let m1 = -(c * (g1 * d2 - g2 * j) + i * d2 * psi) / (d2 * d1 - j * j);
    let m2 = -(c * g2 + m1 * j) / d2;
    (c, m1, m2)
}

#[test]
fn steady_state_is_a_fixed_point() {
    let p = driven(2e12);
    let ss = steady_state(&p).unwrap();
    assert!(ss.x_s != 0.0);
    let CouplingDrive::Rabi(psi) = p.drive else {
        unreachable!()
    };
    let (c, m1, m2) = far_detuned(&p, psi, ss.x_s);
    let rel = |a: Complex<f64>, b: Complex<f64>| (a - b).norm() / b.norm();
    assert!(rel(ss.c_s, c) < 1e-10);
    assert!(rel(ss.m1_s, m1) < 1e-10);
    assert!(rel(ss.m2_s, m2) < 1e-10);
    let x = -(p.g0 / p.omega_b) * ss.m1_s.norm_sqr();
    assert!((ss.x_s - x).abs() <= 1e-10 * x.abs());
    assert_eq!(ss.y_s, 0.0);
    let expected = (2f64.sqrt() * p.g0 * ss.m1_s.norm()).abs();
    assert!((ss.g_eff.norm() - expected).abs() <= 1e-12 * expected);
}

#[test]
fn far_detuned_amplitude_matches_exact_oracle() {
    // every detuning is far above every decay rate
    let mut p = driven(1e12);
    p.kappa_c = w(2e3);
    p.kappa_m1 = w(2e3);
    p.kappa_m2 = w(2e3);
    let approx = steady_state(&p).unwrap();
    let exact = steady_state_oracle(&p).unwrap();
    let rel = (approx.m1_s.norm() - exact.m1_s.norm()).abs() / exact.m1_s.norm();
    assert!(rel < 1e-3, "relative |m1_s| mismatch {rel:e}");
}

#[test]
fn undriven_state_is_exactly_zero() {
    let ss = steady_state(&driven(0.0)).unwrap();
    assert_eq!(ss.m1_s.norm(), 0.0);
    assert_eq!(ss.c_s.norm(), 0.0);
    assert_eq!(ss.x_s, 0.0);
    assert_eq!(ss.g_eff.norm(), 0.0);
}

#[test]
fn drift_sparsity_and_barnett_sign() {
    let structural_zeros = {
        let mut p = direct();
        p.drive = CouplingDrive::Direct(1.0);
        let a = build_drift(&p, &steady_state(&p).unwrap()).0;
        a.map(|v| v == 0.0)
    };
    for p in [direct(), {
        let mut q = direct();
        q.j = 0.0;
        q
    }] {
        let a = build_drift(&p, &steady_state(&p).unwrap()).0;
        for (z, v) in structural_zeros.iter().zip(a.iter()) {
            if *z {
                assert_eq!(*v, 0.0);
            }
        }
        assert_eq!(a[(0, 3)], p.g1);
        assert_eq!(a[(2, 6)], -w(4.8e6));
        assert_eq!(a[(7, 3)], w(4.8e6));
    }

    let p = direct();
    let mut q = p.clone();
    q.delta_b = -p.delta_b;
    let a = build_drift(&p, &steady_state(&p).unwrap()).0;
    let b = build_drift(&q, &steady_state(&q).unwrap()).0;
    let changed: Vec<_> = (0..8)
        .flat_map(|i| (0..8).map(move |j| (i, j)))
        .filter(|&(i, j)| a[(i, j)] != b[(i, j)])
        .collect();
    assert_eq!(changed, vec![(2, 3), (3, 2)]);
}

#[test]
fn diffusion_seventh_entry_is_zero() {
    for t in [0.0, 0.01, 0.2] {
        let mut p = direct();
        p.temperature = t;
        assert_eq!(build_diffusion(&p).unwrap().diagonal()[6], 0.0);
    }
}

#[test]
fn preset_like_configuration_is_physical() {
    let c = covariance(&direct());
    let nus = symplectic_eigenvalues(&c).unwrap();
    assert_eq!(nus.len(), 4);
    assert!(nus[0] >= 0.5 - 1e-9);
}

#[test]
fn symplectic_routes_agree_on_model_states() {
    for p in [direct(), {
        let mut q = direct();
        q.temperature = 0.1;
        q
    }] {
        let c = covariance(&p);
        let pair = [Mode::Magnon1, Mode::Magnon2];
        let triple = [Mode::Magnon1, Mode::Cavity, Mode::Phonon];
        let subs = [&pair[..], &triple[..]]
            .map(|modes| reduce(&c, &ModeSelection::new(modes).unwrap()).unwrap());
        for sub in subs.iter().chain([&c]) {
            let pt = partial_transpose(sub, 0).unwrap();
            for s in [sub, &pt] {
                let a = symplectic_eigenvalues(s).unwrap();
                let b = symplectic_eigenvalues_sigma_y(s).unwrap();
                for (x, y) in a.iter().zip(&b) {
                    assert!((x - y).abs() <= 1e-12 * x.max(1.0), "{x} vs {y}");
                }
            }
        }
    }
}

#[test]
fn model_covariance_satisfies_lyapunov_and_oracle() {
    let p = direct();
    let an = analyze(&p).unwrap();
    let c = an.covariance.unwrap();
    let a = DMatrix::from_iterator(8, 8, an.drift.0.iter().copied());
    let f = DMatrix::from_iterator(8, 8, an.diffusion.to_matrix().iter().copied());
    let r = lyapunov_residual(&a, c.matrix(), &f).unwrap();
    assert!(r <= RESIDUAL_REL_TOL * f.amax());
    let oracle = lyapunov_integral_oracle(&a, &f, 1e3, 1e-16).unwrap();
    let rel = (c.matrix() - &oracle).norm() / oracle.norm();
    assert!(rel <= 1e-6, "oracle disagreement {rel:e}");
}

#[test]
fn random_corpus_against_oracle() {
    for seed in 0..20 {
        let (a, f) = random_stable_system(seed).unwrap();
        assert!(is_stable(&a).unwrap().stable);
        let c = solve_lyapunov(&a, &f).unwrap();
        let ad = DMatrix::from_iterator(8, 8, a.0.iter().copied());
        let fd = DMatrix::from_iterator(8, 8, f.to_matrix().iter().copied());
        assert!(lyapunov_residual(&ad, c.matrix(), &fd).unwrap() <= RESIDUAL_REL_TOL * fd.amax());
        let oracle = lyapunov_integral_oracle(&ad, &fd, 1e6, 1e-16).unwrap();
        assert!((c.matrix() - &oracle).norm() <= 1e-6 * oracle.norm());
    }
}

#[test]
fn sweep_results_do_not_depend_on_thread_count() {
    let spec = SweepSpec {
        name: "det".into(),
        base: direct(),
        axis: SweepAxis::DeltaCOverOmegaB,
        start: -2.0,
        stop: 1.0,
        count: 41,
        measures: vec![
            Measure::Bipartite(Mode::Magnon1, Mode::Magnon2),
            Measure::Tripartite([Mode::Magnon1, Mode::Cavity, Mode::Phonon]),
        ],
        delta_b_pair: Some(0.2),
    };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_sweep(&spec).unwrap())
    };
    assert_eq!(run(1), run(3));
}

fn random_covariance(seed: u64, n: usize) -> CovarianceMatrix {
    let (a, f) = random_stable_system(seed).unwrap();
    let c = solve_lyapunov(&a, &f).unwrap();
    // a PSD block plus vacuum noise is always a physical state
    let m = c.matrix().view((0, 0), (2 * n, 2 * n)) + DMatrix::identity(2 * n, 2 * n) * 0.5;
    CovarianceMatrix::new(m).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partial_transpose_is_an_involution(seed in 0u64..10_000, n in 1usize..=4, flip in 0usize..4) {
        let c = random_covariance(seed, n);
        let flip = flip % n;
        let back = partial_transpose(&partial_transpose(&c, flip).unwrap(), flip).unwrap();
        prop_assert_eq!(back.matrix(), c.matrix());
    }

    #[test]
    fn partial_transpose_keeps_determinant(seed in 0u64..10_000, n in 1usize..=4, flip in 0usize..4) {
        let c = random_covariance(seed, n);
        let d0 = c.matrix().determinant();
        let d1 = partial_transpose(&c, flip % n).unwrap().matrix().determinant();
        prop_assert!((d1 - d0).abs() <= 1e-12 * d0.abs());
    }

    #[test]
    fn williamson_product_is_determinant(seed in 0u64..10_000, n in 1usize..=4) {
        let c = random_covariance(seed, n);
        let prod: f64 = symplectic_eigenvalues(&c).unwrap().iter().map(|v| v * v).product();
        let det = c.matrix().determinant();
        prop_assert!((prod - det).abs() <= 1e-9 * det.abs(), "{} vs {}", prod, det);
    }

    #[test]
    fn detuning_setters_are_exact(dc in -3.0f64..3.0) {
        let mut p = direct();
        p.set_delta_c(dc * p.omega_b);
        prop_assert_eq!(p.detunings().delta_c, p.omega_c - p.omega_drive);
    }
}
