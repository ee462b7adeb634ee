//! Gaussian Wigner functions of the zero-mean fluctuation state.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::CovarianceMatrix;
use crate::model::Mode;

pub const DEFAULT_HALF_RANGE_SIGMAS: f64 = 5.0;
pub const DEFAULT_RESOLUTION: usize = 201;
/// Variance below which a quadrature counts as squeezed (vacuum is 1/2).
pub const SQUEEZING_TOL: f64 = 1e-9;

/// `W(λ) = exp(-½ λᵀC⁻¹λ) / ((2π)ⁿ √det C)` for an `n`-mode covariance.
pub fn wigner_value_n(c: &CovarianceMatrix, point: &[f64]) -> Result<f64> {
    let m = c.matrix();
    if point.len() != m.nrows() {
        return Err(Error::Dimension(format!(
            "point has {} coordinates, state has {}",
            point.len(),
            m.nrows()
        )));
    }
    let chol = m.clone().cholesky().ok_or(Error::SingularCovariance)?;
    let det = chol.determinant();
    if !(det > 0.0) {
        return Err(Error::SingularCovariance);
    }
    let lambda = DVector::from_column_slice(point);
    let quad = lambda.dot(&chol.solve(&lambda));
    let n = c.n_modes() as i32;
    Ok((-0.5 * quad).exp() / ((2.0 * PI).powi(n) * det.sqrt()))
}

/// Single-mode Wigner function at `(x, p)`.
pub fn wigner_value(c: &CovarianceMatrix, x: f64, p: f64) -> Result<f64> {
    let inv = single_mode_inverse(c)?;
    Ok(inv.density(x, p))
}

struct SingleModeInverse {
    inv: Matrix2<f64>,
    norm: f64,
}

impl SingleModeInverse {
    fn density(&self, x: f64, p: f64) -> f64 {
        let quad =
            self.inv[(0, 0)] * x * x + 2.0 * self.inv[(0, 1)] * x * p + self.inv[(1, 1)] * p * p;
        (-0.5 * quad).exp() * self.norm
    }
}

fn single_mode(c: &CovarianceMatrix) -> Result<Matrix2<f64>> {
    if c.n_modes() != 1 {
        return Err(Error::Dimension(format!(
            "single-mode Wigner function needs one mode, got {}",
            c.n_modes()
        )));
    }
    let m = c.matrix();
    Ok(Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]))
}

fn single_mode_inverse(c: &CovarianceMatrix) -> Result<SingleModeInverse> {
    let m = single_mode(c)?;
    let det = m.determinant();
    if !(det > 0.0) || m[(0, 0)] <= 0.0 {
        return Err(Error::SingularCovariance);
    }
    let inv = m.try_inverse().ok_or(Error::SingularCovariance)?;
    Ok(SingleModeInverse {
        inv,
        norm: 1.0 / (2.0 * PI * det.sqrt()),
    })
}

/// The `W = W_max / e` contour, an ellipse with semi-axes `√(2λ_i)` along the
/// eigenvectors of the covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContourEllipse {
    /// Semi-axis along the direction `theta` (the smaller one).
    pub a: f64,
    /// Perpendicular semi-axis.
    pub b: f64,
    /// Orientation of the `a` axis in `[0, π)`.
    pub theta: f64,
}

impl ContourEllipse {
    pub fn area(&self) -> f64 {
        PI * self.a * self.b
    }
}

pub fn contour_ellipse(c: &CovarianceMatrix) -> Result<ContourEllipse> {
    let m = single_mode(c)?;
    let eig = SymmetricEigen::new(m);
    let (small, large) = if eig.eigenvalues[0] <= eig.eigenvalues[1] {
        (0, 1)
    } else {
        (1, 0)
    };
    let (l_small, l_large) = (eig.eigenvalues[small], eig.eigenvalues[large]);
    if !(l_small > 0.0) {
        return Err(Error::SingularCovariance);
    }
    let theta = if l_large - l_small <= 1e-14 * l_large {
        0.0
    } else {
        let v = eig.eigenvectors.column(small);
        v[1].atan2(v[0]).rem_euclid(PI)
    };
    // rem_euclid can round up to exactly π
    let theta = if theta >= PI { 0.0 } else { theta };
    Ok(ContourEllipse {
        a: (2.0 * l_small).sqrt(),
        b: (2.0 * l_large).sqrt(),
        theta,
    })
}

/// Wigner function sampled on a square grid centred at the origin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WignerGrid {
    pub mode: Option<Mode>,
    /// Grid half-width in quadrature units.
    pub half_range: f64,
    pub resolution: usize,
    /// Shared coordinates of both axes.
    pub axis: Vec<f64>,
    /// Row-major values; row `i` holds `p = axis[i]`, column `j` holds
    /// `x = axis[j]`.
    pub values: Vec<f64>,
    pub contour: ContourEllipse,
}

impl WignerGrid {
    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.resolution + col]
    }

    /// Two-dimensional trapezoidal integral of the sampled values.
    pub fn trapezoid_integral(&self) -> f64 {
        let n = self.resolution;
        let h = self.axis[1] - self.axis[0];
        let edge = |k: usize| if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
        let mut total = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += edge(j) * self.value(i, j);
            }
            total += edge(i) * row;
        }
        total * h * h
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Evaluates the single-mode Wigner function over `±half_range_sigmas · σ`,
/// where `σ²` is the larger covariance eigenvalue.
pub fn wigner_grid(
    c: &CovarianceMatrix,
    half_range_sigmas: f64,
    resolution: usize,
) -> Result<WignerGrid> {
    if resolution < 2 {
        return Err(Error::Domain("grid resolution must be at least 2".into()));
    }
    if !(half_range_sigmas > 0.0) {
        return Err(Error::Domain("grid half-range must be positive".into()));
    }
    let inv = single_mode_inverse(c)?;
    let contour = contour_ellipse(c)?;
    let sigma = contour.b / 2f64.sqrt();
    let half_range = half_range_sigmas * sigma;
    let step = 2.0 * half_range / (resolution - 1) as f64;
    let axis: Vec<f64> = (0..resolution)
        .map(|k| (k as f64 - 0.5 * (resolution - 1) as f64) * step)
        .collect();
    let values: Vec<f64> = (0..resolution)
        .into_par_iter()
        .flat_map_iter(|i| {
            let p = axis[i];
            let inv = &inv;
            axis.iter().map(move |&x| inv.density(x, p))
        })
        .collect();
    Ok(WignerGrid {
        mode: c.modes().first().copied(),
        half_range,
        resolution,
        axis,
        values,
        contour,
    })
}

/// Smallest quadrature variance over all rotation angles, and whether it
/// falls below the vacuum value 1/2.
pub fn quadrature_squeezing(c: &CovarianceMatrix) -> Result<(f64, bool)> {
    let m = single_mode(c)?;
    let min = SymmetricEigen::new(m).eigenvalues.min();
    Ok((min, min < 0.5 - SQUEEZING_TOL))
}

/// Two-mode Wigner function at `(x1, p1, x2, p2)`.
pub fn wigner_value_two_mode(c: &CovarianceMatrix, point: [f64; 4]) -> Result<f64> {
    if c.n_modes() != 2 {
        return Err(Error::Dimension(
            "two-mode Wigner function needs two modes".into(),
        ));
    }
    wigner_value_n(c, &point)
}

/// Rotated single-mode squeezed covariance, used by tests and examples.
pub fn rotated_squeezed(r: f64, angle: f64) -> CovarianceMatrix {
    let (s, co) = angle.sin_cos();
    let rot = DMatrix::from_row_slice(2, 2, &[co, -s, s, co]);
    let d = DMatrix::from_diagonal(&DVector::from_vec(vec![
        (-2.0 * r).exp() / 2.0,
        (2.0 * r).exp() / 2.0,
    ]));
    CovarianceMatrix::new(&rot * d * rot.transpose()).expect("valid squeezed covariance")
}
