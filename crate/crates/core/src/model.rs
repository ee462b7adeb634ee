//! Linearized dynamics of the driven four-mode system.
//!
//! Quadrature ordering throughout the crate is
//! `(X_c, Y_c, X_m1, Y_m1, X_m2, Y_m2, x, y)`: cavity, the two magnons and
//! the mechanical (phonon) mode. All rates and frequencies are angular
//! (rad/s); conversion from ordinary Hz happens at the configuration boundary.

use std::fmt;

use nalgebra::{Complex, Matrix3, SMatrix, SVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant, J·s (CODATA 2018, exact).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant, J/K (exact).
pub const K_B: f64 = 1.380_649e-23;

pub type Complex64 = Complex<f64>;
pub type Matrix8 = SMatrix<f64, 8, 8>;
pub type Vector8 = SVector<f64, 8>;

/// Relative change in `|m1_s|` at which the fixed-point iteration stops.
pub const STEADY_STATE_TOL: f64 = 1e-12;
pub const STEADY_STATE_MAX_ITER: usize = 1000;
/// Relative imaginary part of `G_eff` above which a warning is logged.
pub const COUPLING_IMAG_WARN: f64 = 1e-6;
/// Marginal-stability band, relative to `max |A_ij|`.
pub const MARGINAL_REL_TOL: f64 = 1e-9;

/// One of the four bosonic modes of the system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "c")]
    Cavity,
    #[serde(rename = "m1")]
    Magnon1,
    #[serde(rename = "m2")]
    Magnon2,
    #[serde(rename = "b")]
    Phonon,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Cavity, Mode::Magnon1, Mode::Magnon2, Mode::Phonon];

    /// Position of the mode in the full 8-dimensional quadrature vector
    /// (its `X` quadrature sits at `2 * index`).
    pub fn index(self) -> usize {
        match self {
            Mode::Cavity => 0,
            Mode::Magnon1 => 1,
            Mode::Magnon2 => 2,
            Mode::Phonon => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Mode::Cavity => "c",
            Mode::Magnon1 => "m1",
            Mode::Magnon2 => "m2",
            Mode::Phonon => "b",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "c" => Ok(Mode::Cavity),
            "m1" => Ok(Mode::Magnon1),
            "m2" => Ok(Mode::Magnon2),
            "b" => Ok(Mode::Phonon),
            other => Err(Error::InvalidSelection(format!(
                "unknown mode `{other}` (expected c, m1, m2 or b)"
            ))),
        }
    }
}

/// How the effective magnomechanical coupling `G` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CouplingDrive {
    /// Rabi frequency of the magnon-1 drive (rad/s); `G` follows from the
    /// semiclassical steady state.
    Rabi(f64),
    /// Effective coupling magnitude (rad/s) given directly.
    Direct(f64),
}

/// Physical rates, frequencies and temperature of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub omega_c: f64,
    pub omega_m1: f64,
    pub omega_m2: f64,
    pub omega_b: f64,
    pub omega_drive: f64,
    /// Barnett shift of magnon 1; its sign encodes the drive direction.
    pub delta_b: f64,
    pub kappa_c: f64,
    pub kappa_m1: f64,
    pub kappa_m2: f64,
    pub gamma_b: f64,
    pub g1: f64,
    pub g2: f64,
    pub j: f64,
    pub g0: f64,
    pub drive: CouplingDrive,
    /// Bath temperature in kelvin.
    pub temperature: f64,
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("kappa_c", self.kappa_c),
            ("kappa_m1", self.kappa_m1),
            ("kappa_m2", self.kappa_m2),
            ("gamma_b", self.gamma_b),
            ("omega_b", self.omega_b),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be finite and > 0, got {value}"),
                });
            }
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "temperature",
                reason: format!("must be finite and >= 0, got {}", self.temperature),
            });
        }
        let finite = [
            ("omega_c", self.omega_c),
            ("omega_m1", self.omega_m1),
            ("omega_m2", self.omega_m2),
            ("omega_drive", self.omega_drive),
            ("delta_b", self.delta_b),
            ("g1", self.g1),
            ("g2", self.g2),
            ("j", self.j),
            ("g0", self.g0),
        ];
        for (name, value) in finite {
            if !value.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be finite, got {value}"),
                });
            }
        }
        let (name, value) = match self.drive {
            CouplingDrive::Rabi(psi) => ("drive_amplitude", psi),
            CouplingDrive::Direct(g) => ("g_direct", g),
        };
        if !value.is_finite() {
            return Err(Error::InvalidParameter {
                name,
                reason: format!("must be finite, got {value}"),
            });
        }
        Ok(())
    }

    /// Detunings with no mechanical displacement (`x_s = 0`).
    pub fn detunings(&self) -> Detunings {
        Detunings::new(self, 0.0)
    }

    /// Sets the cavity frequency so that `Δ_c` equals `delta_c`.
    pub fn set_delta_c(&mut self, delta_c: f64) {
        self.omega_c = self.omega_drive + delta_c;
    }

    pub fn set_delta_m1(&mut self, delta_m1: f64) {
        self.omega_m1 = self.omega_drive + delta_m1;
    }

    pub fn set_delta_m2(&mut self, delta_m2: f64) {
        self.omega_m2 = self.omega_drive + delta_m2;
    }

    /// Thermal occupations `(N_c, N_m1, N_m2, N_b)` at the bath temperature.
    pub fn occupations(&self) -> Result<[f64; 4]> {
        Ok([
            thermal_occupation(self.omega_c, self.temperature)?,
            thermal_occupation(self.omega_m1, self.temperature)?,
            thermal_occupation(self.omega_m2, self.temperature)?,
            thermal_occupation(self.omega_b, self.temperature)?,
        ])
    }
}

/// Mode detunings from the drive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detunings {
    pub delta_c: f64,
    pub delta_m1: f64,
    pub delta_m2: f64,
    /// `Δ_m1 + G_0 x_s`, the magnon-1 detuning shifted by the mechanical
    /// displacement (Barnett shift not included).
    pub delta_m1_tilde: f64,
}

impl Detunings {
    pub fn new(params: &PhysicalParams, x_s: f64) -> Self {
        let delta_m1 = params.omega_m1 - params.omega_drive;
        Self {
            delta_c: params.omega_c - params.omega_drive,
            delta_m1,
            delta_m2: params.omega_m2 - params.omega_drive,
            delta_m1_tilde: delta_m1 + params.g0 * x_s,
        }
    }
}

/// Bose–Einstein occupation `1 / (exp(ħω / k_B T) - 1)`.
///
/// Returns exactly zero at `T = 0`.
pub fn thermal_occupation(omega: f64, temperature: f64) -> Result<f64> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::Domain(format!(
            "thermal occupation needs omega > 0, got {omega}"
        )));
    }
    if !(temperature >= 0.0) || !temperature.is_finite() {
        return Err(Error::Domain(format!(
            "thermal occupation needs T >= 0, got {temperature}"
        )));
    }
    if temperature == 0.0 {
        return Ok(0.0);
    }
    let ratio = HBAR * omega / (K_B * temperature);
    Ok(1.0 / ratio.exp_m1())
}

/// Semiclassical steady state and the resulting effective coupling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub c_s: Complex64,
    pub m1_s: Complex64,
    pub m2_s: Complex64,
    pub x_s: f64,
    pub y_s: f64,
    /// `i √2 G_0 m1_s`, or the direct coupling in bypass mode.
    pub g_eff: Complex64,
    pub iterations: usize,
}

impl SteadyState {
    fn zero(g_eff: Complex64) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        Self {
            c_s: zero,
            m1_s: zero,
            m2_s: zero,
            x_s: 0.0,
            y_s: 0.0,
            g_eff,
            iterations: 0,
        }
    }

    /// `|Im G| / |G|`, zero when `G = 0`.
    pub fn coupling_imag_ratio(&self) -> f64 {
        let norm = self.g_eff.norm();
        if norm == 0.0 {
            0.0
        } else {
            self.g_eff.im.abs() / norm
        }
    }
}

/// Far-detuned amplitude formulas evaluated at a given `Δ̃_m1`.
///
/// Returns `(c_s, m1_s, m2_s)`.
pub(crate) fn far_detuned_amplitudes(
    params: &PhysicalParams,
    psi: f64,
    delta_c: f64,
    delta_m1_tilde: f64,
    delta_m2: f64,
) -> Result<(Complex64, Complex64, Complex64)> {
    let PhysicalParams {
        g1, g2, j, delta_b, ..
    } = *params;
    let i = Complex64::new(0.0, 1.0);
    let d1 = delta_m1_tilde + delta_b;
    let scale = [delta_c, d1, delta_m2, g1, g2, j]
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let tiny = |den: f64, order: i32| den.abs() <= 1e-14 * scale.powi(order);

    if tiny(delta_m2, 1) {
        return Err(Error::SingularConfiguration(
            "magnon-2 detuning vanishes".into(),
        ));
    }
    let den_c = delta_c * d1 * delta_m2 - j * j * delta_c - g1 * g1 * delta_m2 - g2 * g2 * d1
        + 2.0 * j * g1 * g2;
    if tiny(den_c, 3) {
        return Err(Error::SingularConfiguration(
            "cavity amplitude denominator vanishes".into(),
        ));
    }
    let den_m1 = delta_m2 * d1 - j * j;
    if tiny(den_m1, 2) {
        return Err(Error::SingularConfiguration(
            "magnon-1 amplitude denominator vanishes".into(),
        ));
    }
    let mix = g1 * delta_m2 - g2 * j;
    let c_s = i * psi * mix / den_c;
    let m1_s = -(c_s * mix + i * delta_m2 * psi) / den_m1;
    let m2_s = -(c_s * g2 + m1_s * j) / delta_m2;
    Ok((c_s, m1_s, m2_s))
}

/// Self-consistent far-detuned steady state.
///
/// The mechanical displacement `x_s = -(G_0/ω_b)|m1_s|²` shifts `Δ̃_m1`,
/// which feeds back into the amplitudes. Plain iteration is used, switching
/// to under-relaxation (factor 0.5) once the `|m1_s|` sequence oscillates.
pub fn steady_state(params: &PhysicalParams) -> Result<SteadyState> {
    params.validate()?;
    let psi = match params.drive {
        CouplingDrive::Direct(g) => return Ok(SteadyState::zero(Complex64::new(g, 0.0))),
        CouplingDrive::Rabi(psi) => psi,
    };
    if psi == 0.0 {
        return Ok(SteadyState::zero(Complex64::new(0.0, 0.0)));
    }

    let det = params.detunings();
    let feedback = params.g0 / params.omega_b;
    let mut x = 0.0_f64;
    let mut relax = 1.0_f64;
    let mut prev_norm: Option<f64> = None;
    let mut prev_step = 0.0_f64;
    let mut last_change = f64::INFINITY;

    for iteration in 1..=STEADY_STATE_MAX_ITER {
        let delta_tilde = det.delta_m1 + params.g0 * x;
        let (c_s, m1_s, m2_s) =
            far_detuned_amplitudes(params, psi, det.delta_c, delta_tilde, det.delta_m2)?;
        let norm = m1_s.norm();
        let state = SteadyState {
            c_s,
            m1_s,
            m2_s,
            x_s: x,
            y_s: 0.0,
            g_eff: Complex64::new(0.0, 2f64.sqrt() * params.g0) * m1_s,
            iterations: iteration,
        };
        if !norm.is_finite() {
            return Err(Error::SingularConfiguration(
                "steady-state amplitude diverged".into(),
            ));
        }
        if let Some(prev) = prev_norm {
            last_change = if norm == 0.0 && prev == 0.0 {
                0.0
            } else {
                (norm - prev).abs() / norm.max(prev)
            };
            if last_change < STEADY_STATE_TOL {
                return Ok(state);
            }
        }
        let target = -feedback * norm * norm;
        let step = target - x;
        if step * prev_step < 0.0 && relax == 1.0 {
            relax = 0.5;
        }
        prev_step = step;
        prev_norm = Some(norm);
        x += relax * step;

        if iteration == STEADY_STATE_MAX_ITER {
            return Err(Error::NoConvergence {
                iterations: iteration,
                last_change,
                last_iterate: Box::new(state),
            });
        }
    }
    unreachable!("loop returns on its last iteration")
}

/// Steady state from the exact stationarity conditions of the mean-field
/// Langevin equations, decay terms included.
///
/// For a fixed displacement `x` the three optical/magnonic equations are
/// linear and are solved directly; the scalar condition
/// `x + (G_0/ω_b)|m1(x)|² = 0` is then bracketed and bisected. Dissipation
/// bounds `|m1| ≤ Ψ / min κ`, which gives the initial bracket.
pub fn steady_state_oracle(params: &PhysicalParams) -> Result<SteadyState> {
    params.validate()?;
    let psi = match params.drive {
        CouplingDrive::Rabi(psi) => psi,
        CouplingDrive::Direct(_) => {
            return Err(Error::OracleFailure(
                "oracle needs a Rabi drive, not a direct coupling".into(),
            ))
        }
    };
    let det = params.detunings();
    let i = Complex64::new(0.0, 1.0);
    let amplitudes = |x: f64| -> Result<Vector3<Complex64>> {
        let d1 = det.delta_m1 + params.delta_b + params.g0 * x;
        let m = Matrix3::new(
            -(i * det.delta_c + params.kappa_c),
            -i * params.g1,
            -i * params.g2,
            -i * params.g1,
            -(i * d1 + params.kappa_m1),
            -i * params.j,
            -i * params.g2,
            -i * params.j,
            -(i * det.delta_m2 + params.kappa_m2),
        );
        let rhs = Vector3::new(
            Complex64::new(0.0, 0.0),
            Complex64::new(-psi, 0.0),
            Complex64::new(0.0, 0.0),
        );
        m.lu()
            .solve(&rhs)
            .ok_or_else(|| Error::OracleFailure("singular mean-field system".into()))
    };

    let feedback = params.g0 / params.omega_b;
    let residual = |x: f64| -> Result<f64> {
        let v = amplitudes(x)?;
        Ok(x + feedback * v[1].norm_sqr())
    };

    let kappa_min = params.kappa_c.min(params.kappa_m1).min(params.kappa_m2);
    let bound = -feedback * (psi / kappa_min).powi(2) * 1.01;
    let (mut lo, mut hi) = if bound <= 0.0 {
        (bound, 0.0)
    } else {
        (0.0, bound)
    };
    let mut f_lo = residual(lo)?;
    let f_hi = residual(hi)?;
    if f_lo == 0.0 {
        hi = lo;
    } else if f_hi == 0.0 {
        lo = hi;
    } else if f_lo.signum() == f_hi.signum() {
        return Err(Error::OracleFailure(format!(
            "displacement root not bracketed in [{lo:e}, {hi:e}]"
        )));
    }
    let mut iterations = 0;
    while hi - lo > 1e-15 * lo.abs().max(hi.abs()) && iterations < 400 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let f_mid = residual(mid)?;
        if f_mid == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    if iterations >= 400 {
        return Err(Error::OracleFailure("bisection did not terminate".into()));
    }
    let x = 0.5 * (lo + hi);
    let v = amplitudes(x)?;
    Ok(SteadyState {
        c_s: v[0],
        m1_s: v[1],
        m2_s: v[2],
        x_s: x,
        y_s: 0.0,
        g_eff: Complex64::new(0.0, 2f64.sqrt() * params.g0) * v[1],
        iterations,
    })
}

/// Drift matrix of the linearized quadrature fluctuations.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftMatrix(pub Matrix8);

impl DriftMatrix {
    pub fn matrix(&self) -> &Matrix8 {
        &self.0
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.0.amax()
    }
}

/// Diagonal diffusion (noise-correlation) matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionMatrix(Vector8);

impl DiffusionMatrix {
    /// Wraps an arbitrary non-negative diagonal.
    pub fn from_diagonal(diagonal: Vector8) -> Result<Self> {
        if diagonal.iter().any(|d| !(*d >= 0.0) || !d.is_finite()) {
            return Err(Error::Domain(
                "diffusion diagonal must be finite and non-negative".into(),
            ));
        }
        Ok(Self(diagonal))
    }

    pub fn diagonal(&self) -> &Vector8 {
        &self.0
    }

    pub fn to_matrix(&self) -> Matrix8 {
        Matrix8::from_diagonal(&self.0)
    }
}

/// Builds the 8×8 drift matrix.
///
/// The real part of `G_eff` enters the matrix; a warning is logged when its
/// imaginary part is not negligible.
pub fn build_drift(params: &PhysicalParams, ss: &SteadyState) -> DriftMatrix {
    let det = Detunings::new(params, ss.x_s);
    let ratio = ss.coupling_imag_ratio();
    if ratio > COUPLING_IMAG_WARN {
        log::warn!("effective coupling has relative imaginary part {ratio:e}; using its real part");
    }
    let g = ss.g_eff.re;
    let d1 = det.delta_m1_tilde + params.delta_b;
    let PhysicalParams {
        kappa_c,
        kappa_m1,
        kappa_m2,
        gamma_b,
        omega_b,
        g1,
        g2,
        j,
        ..
    } = *params;
    let (dc, dm2) = (det.delta_c, det.delta_m2);

    #[rustfmt::skip]
    let a = Matrix8::from_row_slice(&[
        -kappa_c, dc,       0.0,      g1,       0.0,      g2,       0.0,      0.0,
        -dc,      -kappa_c, -g1,      0.0,      -g2,      0.0,      0.0,      0.0,
        0.0,      g1,       -kappa_m1, d1,      0.0,      j,        -g,       0.0,
        -g1,      0.0,      -d1,      -kappa_m1, -j,      0.0,      0.0,      0.0,
        0.0,      g2,       0.0,      j,        -kappa_m2, dm2,     0.0,      0.0,
        -g2,      0.0,      -j,       0.0,      -dm2,     -kappa_m2, 0.0,     0.0,
        0.0,      0.0,      0.0,      0.0,      0.0,      0.0,      0.0,      omega_b,
        0.0,      0.0,      0.0,      g,        0.0,      0.0,      -omega_b, -gamma_b,
    ]);
    DriftMatrix(a)
}

/// Builds the diagonal diffusion matrix from the thermal occupations.
pub fn build_diffusion(params: &PhysicalParams) -> Result<DiffusionMatrix> {
    let [n_c, n_m1, n_m2, n_b] = params.occupations()?;
    let c = params.kappa_c * (2.0 * n_c + 1.0);
    let m1 = params.kappa_m1 * (2.0 * n_m1 + 1.0);
    let m2 = params.kappa_m2 * (2.0 * n_m2 + 1.0);
    let b = params.gamma_b * (2.0 * n_b + 1.0);
    DiffusionMatrix::from_diagonal(Vector8::from_column_slice(&[c, c, m1, m1, m2, m2, 0.0, b]))
}

/// Outcome of the eigenvalue stability test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// Every eigenvalue has a negative real part.
    pub stable: bool,
    /// Largest real part over the spectrum.
    pub spectral_abscissa: f64,
    /// The abscissa lies within `±1e-9 · max|A_ij|` of zero.
    pub marginal: bool,
}

impl StabilityReport {
    /// Stable and clear of the marginal band.
    pub fn is_usable(&self) -> bool {
        self.stable && !self.marginal
    }
}

pub fn is_stable(drift: &DriftMatrix) -> Result<StabilityReport> {
    let abscissa = spectral_abscissa(&drift.0)?;
    let eps = MARGINAL_REL_TOL * drift.max_abs();
    Ok(StabilityReport {
        stable: abscissa < 0.0,
        spectral_abscissa: abscissa,
        marginal: abscissa.abs() < eps,
    })
}

pub(crate) fn spectral_abscissa<D>(a: &nalgebra::OMatrix<f64, D, D>) -> Result<f64>
where
    D: nalgebra::Dim + nalgebra::DimSub<nalgebra::U1>,
    nalgebra::DefaultAllocator: nalgebra::allocator::Allocator<D, D>
        + nalgebra::allocator::Allocator<D>
        + nalgebra::allocator::Allocator<<D as nalgebra::DimSub<nalgebra::U1>>::Output>
        + nalgebra::allocator::Allocator<D, <D as nalgebra::DimSub<nalgebra::U1>>::Output>,
{
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite entry in drift matrix".into()));
    }
    let schur = nalgebra::Schur::try_new(a.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Numerical("Schur decomposition did not converge".into()))?;
    Ok(schur
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max))
}
