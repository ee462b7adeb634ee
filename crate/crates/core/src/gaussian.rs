//! Covariance-matrix algebra for zero-mean Gaussian states.
//!
//! Quadratures are ordered `(x_1, p_1, x_2, p_2, ...)` and the vacuum has
//! covariance `I/2`, so the uncertainty principle reads `ν_j ≥ 1/2` for
//! every symplectic eigenvalue.

use nalgebra::{Complex, DMatrix, Schur};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Mode;

/// Slack on the `ν ≥ 1/2` uncertainty bound.
pub const PHYSICALITY_TOL: f64 = 1e-9;
/// Relative tolerance when pairing the `±iν` eigenvalues of `ΩC`.
pub const PAIRING_REL_TOL: f64 = 1e-9;

/// Symmetric `2n × 2n` covariance matrix of `n ∈ 1..=4` modes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovarianceMatrix {
    #[serde(serialize_with = "serialize_rows")]
    matrix: DMatrix<f64>,
    modes: Vec<Mode>,
}

fn serialize_rows<S: serde::Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
    let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
    serde::Serialize::serialize(&rows, s)
}

impl CovarianceMatrix {
    /// Wraps `matrix`, labelling its modes `c, m1, m2, b` in order.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows() / 2;
        let modes = Mode::ALL.iter().take(n).copied().collect();
        Self::with_modes(matrix, modes)
    }

    /// Wraps `matrix` with explicit mode labels. Round-off asymmetry is
    /// removed by `C ← (C + Cᵀ)/2`; anything larger is rejected.
    pub fn with_modes(matrix: DMatrix<f64>, modes: Vec<Mode>) -> Result<Self> {
        let (r, c) = matrix.shape();
        if r != c || r % 2 != 0 || r == 0 || r > 8 {
            return Err(Error::Dimension(format!(
                "covariance matrix must be 2n x 2n with n in 1..=4, got {r}x{c}"
            )));
        }
        if modes.len() != r / 2 {
            return Err(Error::Dimension(format!(
                "{} mode labels for a {r}x{r} covariance matrix",
                modes.len()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite covariance entry".into()));
        }
        let asymmetry = (&matrix - matrix.transpose()).amax();
        if asymmetry > 1e-8 * matrix.amax().max(1.0) {
            return Err(Error::Domain(format!(
                "covariance matrix is not symmetric (max asymmetry {asymmetry:e})"
            )));
        }
        let matrix = (&matrix + matrix.transpose()) * 0.5;
        Ok(Self { matrix, modes })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    /// Position of `mode` within this matrix, if present.
    pub fn position(&self, mode: Mode) -> Option<usize> {
        self.modes.iter().position(|m| *m == mode)
    }
}

/// Ordered, duplicate-free choice of one to three modes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeSelection(Vec<Mode>);

impl ModeSelection {
    pub fn new(modes: &[Mode]) -> Result<Self> {
        if modes.is_empty() || modes.len() > 3 {
            return Err(Error::InvalidSelection(format!(
                "select 1 to 3 modes, got {}",
                modes.len()
            )));
        }
        for (i, m) in modes.iter().enumerate() {
            if modes[..i].contains(m) {
                return Err(Error::InvalidSelection(format!("mode {m} selected twice")));
            }
        }
        Ok(Self(modes.to_vec()))
    }

    pub fn modes(&self) -> &[Mode] {
        &self.0
    }
}

/// Principal submatrix of the selected modes, in selection order.
pub fn reduce(c: &CovarianceMatrix, selection: &ModeSelection) -> Result<CovarianceMatrix> {
    let mut rows = Vec::with_capacity(2 * selection.0.len());
    for mode in &selection.0 {
        let k = c.position(*mode).ok_or_else(|| {
            Error::InvalidSelection(format!("mode {mode} is not part of this covariance matrix"))
        })?;
        rows.push(2 * k);
        rows.push(2 * k + 1);
    }
    let m = rows.len();
    let sub = DMatrix::from_fn(m, m, |i, j| c.matrix[(rows[i], rows[j])]);
    Ok(CovarianceMatrix {
        matrix: sub,
        modes: selection.0.clone(),
    })
}

/// `K C K` with `K` flipping the momentum of the mode at position
/// `flip_mode` (zero-based). Position 0 reproduces `diag(1, -1, 1, 1)` for
/// two modes.
pub fn partial_transpose(c: &CovarianceMatrix, flip_mode: usize) -> Result<CovarianceMatrix> {
    if flip_mode >= c.n_modes() {
        return Err(Error::InvalidSelection(format!(
            "cannot flip mode {flip_mode} of a {}-mode state",
            c.n_modes()
        )));
    }
    let p = 2 * flip_mode + 1;
    let mut out = c.matrix.clone();
    let dim = out.nrows();
    for k in 0..dim {
        if k != p {
            out[(p, k)] = -out[(p, k)];
            out[(k, p)] = -out[(k, p)];
        }
    }
    Ok(CovarianceMatrix {
        matrix: out,
        modes: c.modes.clone(),
    })
}

/// Symplectic form `⊕ [[0, 1], [-1, 0]]`.
pub fn symplectic_form(n: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

/// Symplectic eigenvalues in ascending order: the moduli of the `±iν`
/// eigenvalue pairs of `ΩC`.
pub fn symplectic_eigenvalues(c: &CovarianceMatrix) -> Result<Vec<f64>> {
    let n = c.n_modes();
    let oc = symplectic_form(n) * &c.matrix;
    let schur = Schur::try_new(oc, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Numerical("eigen-decomposition of ΩC failed".into()))?;
    let moduli: Vec<f64> = schur
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .collect();
    pair_moduli(moduli, c)
}

/// Same spectrum computed from the complex matrix `⊕(-σ_y) C`.
pub fn symplectic_eigenvalues_sigma_y(c: &CovarianceMatrix) -> Result<Vec<f64>> {
    let dim = c.matrix.nrows();
    let i = Complex::new(0.0, 1.0);
    let mut sigma = DMatrix::<Complex<f64>>::zeros(dim, dim);
    for k in 0..dim / 2 {
        // -σ_y = [[0, i], [-i, 0]]
        sigma[(2 * k, 2 * k + 1)] = i;
        sigma[(2 * k + 1, 2 * k)] = -i;
    }
    let cm = c.matrix.map(|v| Complex::new(v, 0.0));
    let product = sigma * cm;
    let eig = Schur::try_new(product, f64::EPSILON, 10_000)
        .and_then(|s| s.eigenvalues())
        .ok_or_else(|| Error::Numerical("eigen-decomposition of ⊕(-σ_y)C failed".into()))?;
    pair_moduli(eig.iter().map(|z| z.norm()).collect(), c)
}

fn pair_moduli(mut moduli: Vec<f64>, c: &CovarianceMatrix) -> Result<Vec<f64>> {
    moduli.sort_by(f64::total_cmp);
    let tol = PAIRING_REL_TOL * c.matrix.amax().max(1.0);
    moduli
        .chunks_exact(2)
        .map(|pair| {
            if (pair[1] - pair[0]).abs() > tol {
                Err(Error::Numerical(format!(
                    "unpaired symplectic spectrum: {} vs {}",
                    pair[0], pair[1]
                )))
            } else {
                Ok(0.5 * (pair[0] + pair[1]))
            }
        })
        .collect()
}

/// Smallest symplectic eigenvalue.
pub fn min_symplectic_eigenvalue(c: &CovarianceMatrix) -> Result<f64> {
    Ok(symplectic_eigenvalues(c)?[0])
}

/// Uncertainty-principle check `min ν ≥ 1/2 - 1e-9`.
pub fn physicality_check(c: &CovarianceMatrix) -> bool {
    matches!(min_symplectic_eigenvalue(c), Ok(nu) if nu >= 0.5 - PHYSICALITY_TOL)
}

/// Covariance of a two-mode squeezed vacuum with squeezing `r`.
pub fn two_mode_squeezed(r: f64) -> CovarianceMatrix {
    let (ch, sh) = ((2.0 * r).cosh() / 2.0, (2.0 * r).sinh() / 2.0);
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(4, 4, &[
        ch,  0.0, sh,  0.0,
        0.0, ch,  0.0, -sh,
        sh,  0.0, ch,  0.0,
        0.0, -sh, 0.0, ch,
    ]);
    CovarianceMatrix::new(m).expect("two-mode squeezed covariance is valid")
}

/// Block-diagonal combination of independent states.
pub fn direct_sum(parts: &[&CovarianceMatrix]) -> Result<CovarianceMatrix> {
    let dim: usize = parts.iter().map(|p| p.matrix.nrows()).sum();
    let mut m = DMatrix::zeros(dim, dim);
    let mut offset = 0;
    for p in parts {
        let k = p.matrix.nrows();
        m.view_mut((offset, offset), (k, k)).copy_from(&p.matrix);
        offset += k;
    }
    CovarianceMatrix::new(m)
}
