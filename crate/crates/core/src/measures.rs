//! Entanglement and nonreciprocity quantifiers.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{
    min_symplectic_eigenvalue, partial_transpose, reduce, CovarianceMatrix, ModeSelection,
    PHYSICALITY_TOL,
};
use crate::model::Mode;

/// Negative residual contangles above this value are rounding noise.
pub const CONTANGLE_CLAMP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BipartiteResult {
    pub modes: (Mode, Mode),
    /// Logarithmic negativity `max(0, -ln 2ν⁻)`.
    pub e_n: f64,
    /// Smallest symplectic eigenvalue of the partially transposed state.
    pub nu_minus: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualContangle {
    pub pivot: Mode,
    /// `E²_{α|βγ} - E²_{α|β} - E²_{α|γ}` before clamping.
    pub raw: f64,
    /// `raw`, with values in `(-1e-9, 0)` clamped to zero.
    pub value: f64,
    /// `raw ≤ -1e-9`: the monogamy inequality failed beyond round-off.
    pub violation: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TripartiteResult {
    pub modes: [Mode; 3],
    /// Residual contangle with each mode (in `modes` order) as pivot.
    pub pivots: [ResidualContangle; 3],
    pub r_min: f64,
}

impl TripartiteResult {
    pub fn violation(&self) -> bool {
        self.pivots.iter().any(|p| p.violation)
    }

    pub fn min_raw(&self) -> f64 {
        self.pivots
            .iter()
            .map(|p| p.raw)
            .fold(f64::INFINITY, f64::min)
    }
}

fn negativity_from_nu(nu_minus: f64) -> f64 {
    (-(2.0 * nu_minus).ln()).max(0.0)
}

fn require_physical(c: &CovarianceMatrix) -> Result<()> {
    let nu = min_symplectic_eigenvalue(c)?;
    if nu < 0.5 - PHYSICALITY_TOL {
        return Err(Error::Unphysical { nu_min: nu });
    }
    Ok(())
}

/// Logarithmic negativity of a two-mode state, flipping the first mode.
pub fn log_negativity(c: &CovarianceMatrix) -> Result<BipartiteResult> {
    log_negativity_with_flip(c, 0)
}

/// Logarithmic negativity with the momentum of mode `flip` (0 or 1)
/// reversed in the partial transpose.
pub fn log_negativity_with_flip(c: &CovarianceMatrix, flip: usize) -> Result<BipartiteResult> {
    if c.n_modes() != 2 {
        return Err(Error::Dimension(format!(
            "log negativity needs a two-mode state, got {} modes",
            c.n_modes()
        )));
    }
    require_physical(c)?;
    let nu_minus = min_symplectic_eigenvalue(&partial_transpose(c, flip)?)?;
    let modes = c.modes();
    Ok(BipartiteResult {
        modes: (modes[0], modes[1]),
        e_n: negativity_from_nu(nu_minus),
        nu_minus,
    })
}

/// Negativity between the mode at position `pivot` and the other two.
pub fn one_vs_two_negativity(c: &CovarianceMatrix, pivot: usize) -> Result<f64> {
    if c.n_modes() != 3 {
        return Err(Error::Dimension(format!(
            "one-vs-two negativity needs a three-mode state, got {} modes",
            c.n_modes()
        )));
    }
    require_physical(c)?;
    let nu_minus = min_symplectic_eigenvalue(&partial_transpose(c, pivot)?)?;
    Ok(negativity_from_nu(nu_minus))
}

/// Residual contangle with the mode at position `pivot` as the focus.
pub fn residual_contangle(c: &CovarianceMatrix, pivot: usize) -> Result<ResidualContangle> {
    let whole = one_vs_two_negativity(c, pivot)?;
    let modes = c.modes();
    let alpha = modes[pivot];
    let mut raw = whole * whole;
    for other in modes.iter().filter(|m| **m != alpha) {
        let pair = reduce(c, &ModeSelection::new(&[alpha, *other])?)?;
        let e = log_negativity(&pair)?.e_n;
        raw -= e * e;
    }
    let violation = raw <= -CONTANGLE_CLAMP;
    if violation {
        log::warn!("monogamy violated for pivot {alpha}: residual contangle {raw:e}");
    }
    let value = if raw < 0.0 && !violation { 0.0 } else { raw };
    Ok(ResidualContangle {
        pivot: alpha,
        raw,
        value,
        violation,
    })
}

/// Minimum residual contangle over the three pivots.
pub fn min_residual_contangle(c: &CovarianceMatrix) -> Result<TripartiteResult> {
    let pivots = [
        residual_contangle(c, 0)?,
        residual_contangle(c, 1)?,
        residual_contangle(c, 2)?,
    ];
    let r_min = pivots.iter().map(|p| p.value).fold(f64::INFINITY, f64::min);
    let modes = c.modes();
    Ok(TripartiteResult {
        modes: [modes[0], modes[1], modes[2]],
        pivots,
        r_min,
    })
}

/// Bidirectional contrast `|E₊ - E₋| / (E₊ + E₋)`, defined as 0 when both
/// directions vanish.
pub fn contrast_ratio(positive: f64, negative: f64) -> Result<f64> {
    if !(positive >= 0.0) || !(negative >= 0.0) {
        return Err(Error::Domain(format!(
            "contrast ratio needs non-negative inputs, got ({positive}, {negative})"
        )));
    }
    let sum = positive + negative;
    if sum == 0.0 {
        return Ok(0.0);
    }
    Ok(((positive - negative).abs() / sum).min(1.0))
}
