//! Steady-state covariance from the continuous Lyapunov equation
//! `A C + C Aᵀ + F = 0`.
//!
//! The solver vectorizes the equation into the `n² × n²` Kronecker system
//! `(I ⊗ A + A ⊗ I) vec(C) = -vec(F)` and solves it by LU with one or two
//! steps of iterative refinement. For the 8×8 drift matrices used here that
//! is a 64-unknown dense solve. [`lyapunov_integral_oracle`] evaluates the
//! integral form `C = ∫ e^{At} F e^{Aᵀt} dt` instead and exists to cross-check
//! the solver.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gaussian::CovarianceMatrix;
use crate::model::{is_stable, spectral_abscissa, DiffusionMatrix, DriftMatrix, Matrix8, Vector8};

/// Required residual, relative to `max |F_ij|`.
pub const RESIDUAL_REL_TOL: f64 = 1e-10;
/// Pivot-ratio condition estimate above which the solve is refused.
pub const CONDITION_LIMIT: f64 = 1e15;

/// Solves `A C + C Aᵀ + F = 0` for the steady-state covariance.
///
/// Fails with [`Error::Unstable`] before solving if `A` has an eigenvalue
/// with non-negative real part.
pub fn solve_lyapunov(
    drift: &DriftMatrix,
    diffusion: &DiffusionMatrix,
) -> Result<CovarianceMatrix> {
    let report = is_stable(drift)?;
    if !report.stable {
        return Err(Error::Unstable {
            abscissa: report.spectral_abscissa,
        });
    }
    let a = DMatrix::from_column_slice(8, 8, drift.matrix().as_slice());
    let f = DMatrix::from_column_slice(8, 8, diffusion.to_matrix().as_slice());
    let c = solve_dense(&a, &f)?;
    CovarianceMatrix::new(c)
}

/// Dense Lyapunov solve for any square size; the caller is responsible for
/// stability.
pub fn solve_dense(a: &DMatrix<f64>, f: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = check_square(a, "A")?;
    if f.shape() != (n, n) {
        return Err(Error::Dimension(format!(
            "F is {}x{}, expected {n}x{n}",
            f.nrows(),
            f.ncols()
        )));
    }
    let f_norm = f.amax();
    if f_norm == 0.0 {
        return Ok(DMatrix::zeros(n, n));
    }
    // Rescaling A and F by the same factor leaves C unchanged.
    let scale = a.amax();
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::Numerical(
            "drift matrix is zero or non-finite".into(),
        ));
    }
    let a_s = a / scale;
    let f_s = f / scale;

    let k = kronecker_operator(&a_s);
    let lu = k.lu();
    let u = lu.u();
    let pivots = u.diagonal().map(f64::abs);
    let condition = pivots.max() / pivots.min();
    let rhs = -DVector::from_column_slice(f_s.as_slice());
    let x = lu.solve(&rhs).ok_or(Error::IllConditioned {
        condition: f64::INFINITY,
        residual: f64::INFINITY,
    })?;
    let mut c = DMatrix::from_column_slice(n, n, x.as_slice());

    let mut residual = residual_matrix(&a_s, &c, &f_s);
    for _ in 0..2 {
        let r_norm = residual.amax();
        if r_norm == 0.0 {
            break;
        }
        let correction = match lu.solve(&-DVector::from_column_slice(residual.as_slice())) {
            Some(v) => DMatrix::from_column_slice(n, n, v.as_slice()),
            None => break,
        };
        let candidate = &c + correction;
        let candidate_residual = residual_matrix(&a_s, &candidate, &f_s);
        if candidate_residual.amax() < r_norm {
            c = candidate;
            residual = candidate_residual;
        } else {
            break;
        }
    }

    c = (&c + c.transpose()) * 0.5;
    let residual = lyapunov_residual(a, &c, f)?;
    if !residual.is_finite() || residual > RESIDUAL_REL_TOL * f_norm || condition > CONDITION_LIMIT
    {
        return Err(Error::IllConditioned {
            condition,
            residual: residual / f_norm,
        });
    }
    Ok(c)
}

/// `max |A C + C Aᵀ + F|`.
pub fn lyapunov_residual(a: &DMatrix<f64>, c: &DMatrix<f64>, f: &DMatrix<f64>) -> Result<f64> {
    let n = check_square(a, "A")?;
    for (name, m) in [("C", c), ("F", f)] {
        if m.shape() != (n, n) {
            return Err(Error::Dimension(format!(
                "{name} is {}x{}, expected {n}x{n}",
                m.nrows(),
                m.ncols()
            )));
        }
    }
    Ok(residual_matrix(a, c, f).amax())
}

fn residual_matrix(a: &DMatrix<f64>, c: &DMatrix<f64>, f: &DMatrix<f64>) -> DMatrix<f64> {
    a * c + c * a.transpose() + f
}

fn check_square(a: &DMatrix<f64>, name: &str) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension(format!(
            "{name} must be square, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(a.nrows())
}

/// `I ⊗ A + A ⊗ I` acting on column-major `vec(C)`.
fn kronecker_operator(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut k = DMatrix::zeros(n * n, n * n);
    for j in 0..n {
        for i in 0..n {
            let row = i + n * j;
            // (A C)_ij = Σ_m A_im C_mj
            for m in 0..n {
                k[(row, m + n * j)] += a[(i, m)];
            }
            // (C Aᵀ)_ij = Σ_l C_il A_jl
            for l in 0..n {
                k[(row, i + n * l)] += a[(j, l)];
            }
        }
    }
    k
}

/// Covariance from the integral `∫₀^∞ e^{At} F e^{Aᵀt} dt`.
///
/// A 12-point Gauss–Legendre rule covers a first panel `[0, h]` with
/// `h ‖A‖ ≤ 1/2`. The horizon is then doubled repeatedly using
/// `C(2T) = C(T) + Φ(T) C(T) Φ(T)ᵀ`, `Φ(2T) = Φ(T)²` with `Φ(T) = e^{AT}`.
/// The neglected tail beyond `T` equals `Φ(T) C(∞) Φ(T)ᵀ`, so integration
/// stops once `‖Φ(T)‖_F² < tol`. Reaching `horizon` first is an error.
pub fn lyapunov_integral_oracle(
    a: &DMatrix<f64>,
    f: &DMatrix<f64>,
    horizon: f64,
    tol: f64,
) -> Result<DMatrix<f64>> {
    let n = check_square(a, "A")?;
    if f.shape() != (n, n) {
        return Err(Error::Dimension(format!(
            "F is {}x{}, expected {n}x{n}",
            f.nrows(),
            f.ncols()
        )));
    }
    let abscissa = spectral_abscissa(a)?;
    if !(abscissa < 0.0) {
        return Err(Error::Unstable { abscissa });
    }
    if f.amax() == 0.0 {
        return Ok(DMatrix::zeros(n, n));
    }
    let norm = a.norm();
    let h = (0.5 / norm).min(horizon);

    let (nodes, weights) = gauss_legendre(12);
    let mut c = DMatrix::zeros(n, n);
    for (x, w) in nodes.iter().zip(&weights) {
        let t = 0.5 * h * (x + 1.0);
        let phi = (a * t).exp();
        c += &phi * f * phi.transpose() * (0.5 * h * w);
    }

    let mut phi = (a * h).exp();
    let mut t = h;
    loop {
        let decay = phi.norm_squared();
        if decay < tol {
            return Ok((&c + c.transpose()) * 0.5);
        }
        if t >= horizon {
            return Err(Error::Accuracy {
                horizon,
                tol,
                tail: decay,
            });
        }
        c = &c + &phi * &c * phi.transpose();
        phi = &phi * &phi;
        t *= 2.0;
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("integral oracle overflowed".into()));
        }
    }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Seeded random stable drift and non-negative diagonal diffusion.
///
/// Entries of `A` are uniform in `[-1, 1]`; the matrix is then shifted by a
/// multiple of the identity so that its spectral abscissa lands in
/// `[-1, -0.05]`. Diffusion entries are uniform in `[0, 2]`.
pub fn random_stable_system(seed: u64) -> Result<(DriftMatrix, DiffusionMatrix)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = Matrix8::from_fn(|_, _| rng.random_range(-1.0..1.0));
    let abscissa = spectral_abscissa(&m)?;
    let margin = rng.random_range(0.05..1.0);
    let a = m - Matrix8::identity() * (abscissa + margin);
    let f = Vector8::from_fn(|_, _| rng.random_range(0.0..2.0));
    Ok((DriftMatrix(a), DiffusionMatrix::from_diagonal(f)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn dense(m: &Matrix8) -> DMatrix<f64> {
        DMatrix::from_column_slice(8, 8, m.as_slice())
    }

    #[test]
    fn scalar_decay() {
        let (k, f) = (3.0, 5.0);
        let a = DriftMatrix(Matrix8::identity() * -k);
        let d = DiffusionMatrix::from_diagonal(Vector8::repeat(f)).unwrap();
        let c = solve_lyapunov(&a, &d).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let expected = if i == j { f / (2.0 * k) } else { 0.0 };
                assert_relative_eq!(c.matrix()[(i, j)], expected, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn rotating_decay_block() {
        let (k, delta, n) = (0.7, 4.0, 2.5);
        let a = DMatrix::from_row_slice(2, 2, &[-k, delta, -delta, -k]);
        let f = DMatrix::identity(2, 2) * (k * (2.0 * n + 1.0));
        let c = solve_dense(&a, &f).unwrap();
        assert_relative_eq!(c, DMatrix::identity(2, 2) * (n + 0.5), epsilon = 1e-13);
    }

    #[test]
    fn unstable_drift_is_rejected() {
        let a = DriftMatrix(Matrix8::identity() * 0.1);
        let d = DiffusionMatrix::from_diagonal(Vector8::repeat(1.0)).unwrap();
        assert!(matches!(
            solve_lyapunov(&a, &d),
            Err(Error::Unstable { .. })
        ));
    }

    #[test]
    fn residual_examples() {
        let (a, f) = random_stable_system(7).unwrap();
        let (a, f) = (dense(a.matrix()), dense(&f.to_matrix()));
        let c = solve_dense(&a, &f).unwrap();
        assert!(lyapunov_residual(&a, &c, &f).unwrap() <= 1e-10 * f.amax());

        let zero = DMatrix::zeros(8, 8);
        assert_eq!(lyapunov_residual(&a, &zero, &f).unwrap(), f.amax());

        // residual(C + δI) = ‖δ (A + Aᵀ)‖ up to the base residual
        let sym = &a + a.transpose();
        for delta in [1e-3, 2e-3, 4e-3] {
            let shifted = &c + DMatrix::identity(8, 8) * delta;
            let r = lyapunov_residual(&a, &shifted, &f).unwrap();
            assert_relative_eq!(r, delta * sym.amax(), max_relative = 1e-6);
        }
    }

    #[test]
    fn residual_dimension_mismatch() {
        let a = DMatrix::<f64>::identity(3, 3);
        let c = DMatrix::<f64>::identity(2, 2);
        assert!(matches!(
            lyapunov_residual(&a, &c, &a),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn oracle_scalar_decay_and_zero_noise() {
        let a = DMatrix::identity(8, 8) * -2.0;
        let f = DMatrix::identity(8, 8) * 3.0;
        let c = lyapunov_integral_oracle(&a, &f, 1e3, 1e-14).unwrap();
        assert_relative_eq!(c, DMatrix::identity(8, 8) * 0.75, epsilon = 1e-12);

        let (a, _) = random_stable_system(3).unwrap();
        let c = lyapunov_integral_oracle(&dense(a.matrix()), &DMatrix::zeros(8, 8), 1e3, 1e-14)
            .unwrap();
        assert_eq!(c.amax(), 0.0);
    }

    #[test]
    fn oracle_short_horizon_is_an_error() {
        let a = DMatrix::identity(2, 2) * -1e-3;
        let f = DMatrix::identity(2, 2);
        assert!(matches!(
            lyapunov_integral_oracle(&a, &f, 1.0, 1e-12),
            Err(Error::Accuracy { .. })
        ));
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(12);
        assert_relative_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
        // exact up to degree 23
        let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(22)).sum();
        assert_relative_eq!(integral, 2.0 / 23.0, epsilon = 1e-14);
    }

    #[test]
    fn random_systems_are_stable() {
        for seed in 0..20 {
            let (a, f) = random_stable_system(seed).unwrap();
            let report = is_stable(&a).unwrap();
            assert!(report.spectral_abscissa <= -0.05 + 1e-9);
            assert!(report.spectral_abscissa >= -1.0 - 1e-9);
            assert!(f.diagonal().iter().all(|v| *v >= 0.0));
        }
    }
}
