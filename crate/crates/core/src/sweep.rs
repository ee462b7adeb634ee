//! Parameter sweeps: the full steady-state pipeline evaluated on a grid.
//!
//! Grid points are independent and are distributed over the current rayon
//! pool; results come back in ascending grid order whatever the thread
//! count. A failing point is recorded in its row and never aborts the sweep.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{min_symplectic_eigenvalue, reduce, CovarianceMatrix, ModeSelection};
use crate::lyapunov::solve_lyapunov;
use crate::measures::{contrast_ratio, log_negativity, min_residual_contangle};
use crate::model::{
    build_diffusion, build_drift, is_stable, steady_state, CouplingDrive, DiffusionMatrix,
    DriftMatrix, Mode, PhysicalParams, StabilityReport, SteadyState,
};
use crate::wigner::quadrature_squeezing;

/// A directly settable physical parameter, expressed in ordinary Hz.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum HzField {
    OmegaC,
    OmegaM1,
    OmegaM2,
    OmegaB,
    OmegaDrive,
    DeltaB,
    KappaC,
    KappaM1,
    KappaM2,
    GammaB,
    G1,
    G2,
    J,
    G0,
    DriveAmplitude,
    GDirect,
}

impl HzField {
    pub const ALL: [HzField; 16] = [
        HzField::OmegaC,
        HzField::OmegaM1,
        HzField::OmegaM2,
        HzField::OmegaB,
        HzField::OmegaDrive,
        HzField::DeltaB,
        HzField::KappaC,
        HzField::KappaM1,
        HzField::KappaM2,
        HzField::GammaB,
        HzField::G1,
        HzField::G2,
        HzField::J,
        HzField::G0,
        HzField::DriveAmplitude,
        HzField::GDirect,
    ];

    /// Configuration key, always carrying the `_hz` suffix.
    pub fn key(self) -> &'static str {
        match self {
            HzField::OmegaC => "omega_c_hz",
            HzField::OmegaM1 => "omega_m1_hz",
            HzField::OmegaM2 => "omega_m2_hz",
            HzField::OmegaB => "omega_b_hz",
            HzField::OmegaDrive => "omega_drive_hz",
            HzField::DeltaB => "delta_b_hz",
            HzField::KappaC => "kappa_c_hz",
            HzField::KappaM1 => "kappa_m1_hz",
            HzField::KappaM2 => "kappa_m2_hz",
            HzField::GammaB => "gamma_b_hz",
            HzField::G1 => "g1_hz",
            HzField::G2 => "g2_hz",
            HzField::J => "j_hz",
            HzField::G0 => "g0_hz",
            HzField::DriveAmplitude => "drive_amplitude_hz",
            HzField::GDirect => "g_direct_hz",
        }
    }

    /// Stores `hz · 2π` in the matching field.
    pub fn set(self, params: &mut PhysicalParams, hz: f64) {
        let w = 2.0 * PI * hz;
        match self {
            HzField::OmegaC => params.omega_c = w,
            HzField::OmegaM1 => params.omega_m1 = w,
            HzField::OmegaM2 => params.omega_m2 = w,
            HzField::OmegaB => params.omega_b = w,
            HzField::OmegaDrive => params.omega_drive = w,
            HzField::DeltaB => params.delta_b = w,
            HzField::KappaC => params.kappa_c = w,
            HzField::KappaM1 => params.kappa_m1 = w,
            HzField::KappaM2 => params.kappa_m2 = w,
            HzField::GammaB => params.gamma_b = w,
            HzField::G1 => params.g1 = w,
            HzField::G2 => params.g2 = w,
            HzField::J => params.j = w,
            HzField::G0 => params.g0 = w,
            HzField::DriveAmplitude => params.drive = CouplingDrive::Rabi(w),
            HzField::GDirect => params.drive = CouplingDrive::Direct(w),
        }
    }
}

/// The swept quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SweepAxis {
    DeltaCOverOmegaB,
    DeltaM1OverOmegaB,
    DeltaM2OverOmegaB,
    DeltaBOverOmegaB,
    JOverG1,
    TemperatureK,
    Hz(HzField),
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::DeltaCOverOmegaB => "delta_c_over_omega_b",
            SweepAxis::DeltaM1OverOmegaB => "delta_m1_over_omega_b",
            SweepAxis::DeltaM2OverOmegaB => "delta_m2_over_omega_b",
            SweepAxis::DeltaBOverOmegaB => "delta_b_over_omega_b",
            SweepAxis::JOverG1 => "j_over_g1",
            SweepAxis::TemperatureK => "temperature_k",
            SweepAxis::Hz(field) => field.key(),
        }
    }

    /// Writes `value` into `params`. Detunings move the mode frequency and
    /// keep the drive fixed.
    pub fn apply(self, params: &mut PhysicalParams, value: f64) {
        match self {
            SweepAxis::DeltaCOverOmegaB => params.set_delta_c(value * params.omega_b),
            SweepAxis::DeltaM1OverOmegaB => params.set_delta_m1(value * params.omega_b),
            SweepAxis::DeltaM2OverOmegaB => params.set_delta_m2(value * params.omega_b),
            SweepAxis::DeltaBOverOmegaB => params.delta_b = value * params.omega_b,
            SweepAxis::JOverG1 => params.j = value * params.g1,
            SweepAxis::TemperatureK => params.temperature = value,
            SweepAxis::Hz(field) => field.set(params, value),
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let fixed = [
            SweepAxis::DeltaCOverOmegaB,
            SweepAxis::DeltaM1OverOmegaB,
            SweepAxis::DeltaM2OverOmegaB,
            SweepAxis::DeltaBOverOmegaB,
            SweepAxis::JOverG1,
            SweepAxis::TemperatureK,
        ];
        fixed
            .into_iter()
            .chain(HzField::ALL.into_iter().map(SweepAxis::Hz))
            .find(|axis| axis.name() == s)
            .ok_or_else(|| Error::InvalidSweep(format!("unknown sweep parameter `{s}`")))
    }
}

/// A quantity reported at every grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Measure {
    /// Logarithmic negativity between two modes.
    Bipartite(Mode, Mode),
    /// Minimal residual contangle of three modes.
    Tripartite([Mode; 3]),
    /// Smallest quadrature variance of one mode.
    Squeezing(Mode),
}

impl Measure {
    /// Column name, e.g. `E_m1m2`, `R_min_m1cb`, `Vmin_c`.
    pub fn column(&self) -> String {
        match self {
            Measure::Bipartite(a, b) => format!("E_{a}{b}"),
            Measure::Tripartite([a, b, c]) => format!("R_min_{a}{b}{c}"),
            Measure::Squeezing(m) => format!("Vmin_{m}"),
        }
    }

    /// Whether a contrast ratio between drive directions is meaningful.
    pub fn has_contrast(&self) -> bool {
        !matches!(self, Measure::Squeezing(_))
    }

    fn selection(&self) -> Result<ModeSelection> {
        match self {
            Measure::Bipartite(a, b) => ModeSelection::new(&[*a, *b]),
            Measure::Tripartite(modes) => ModeSelection::new(modes),
            Measure::Squeezing(m) => ModeSelection::new(&[*m]),
        }
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidSweep(format!("unknown output `{s}`"));
        let parse_modes = |mut rest: &str| -> Result<Vec<Mode>> {
            let mut modes = Vec::new();
            while !rest.is_empty() {
                let len = if rest.starts_with('m') { 2 } else { 1 };
                if rest.len() < len {
                    return Err(bad());
                }
                modes.push(rest[..len].parse().map_err(|_| bad())?);
                rest = &rest[len..];
            }
            Ok(modes)
        };
        let measure = if let Some(rest) = s.strip_prefix("R_min_") {
            let m = parse_modes(rest)?;
            let modes: [Mode; 3] = m.try_into().map_err(|_| bad())?;
            Measure::Tripartite(modes)
        } else if let Some(rest) = s.strip_prefix("E_") {
            match parse_modes(rest)?.as_slice() {
                [a, b] => Measure::Bipartite(*a, *b),
                _ => return Err(bad()),
            }
        } else if let Some(rest) = s.strip_prefix("Vmin_") {
            match parse_modes(rest)?.as_slice() {
                [m] => Measure::Squeezing(*m),
                _ => return Err(bad()),
            }
        } else {
            return Err(bad());
        };
        measure.selection()?;
        Ok(measure)
    }
}

/// One sweep: a base configuration, a linear grid on one axis, and the
/// measures to report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub name: String,
    pub base: PhysicalParams,
    pub axis: SweepAxis,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub measures: Vec<Measure>,
    /// When set, every point is evaluated at `Δ_B = ±value · ω_b` and the
    /// contrast ratio of each measure is reported.
    pub delta_b_pair: Option<f64>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.count < 2 {
            return Err(Error::InvalidSweep(format!(
                "sweep needs at least 2 points, got {}",
                self.count
            )));
        }
        if !self.start.is_finite() || !self.stop.is_finite() {
            return Err(Error::InvalidSweep("sweep range must be finite".into()));
        }
        if self.measures.is_empty() {
            return Err(Error::InvalidSweep("no outputs requested".into()));
        }
        if let Some(mag) = self.delta_b_pair {
            if !(mag >= 0.0) || !mag.is_finite() {
                return Err(Error::InvalidSweep(format!(
                    "Barnett pair magnitude must be finite and >= 0, got {mag}"
                )));
            }
            if self.axis == SweepAxis::DeltaBOverOmegaB
                || self.axis == SweepAxis::Hz(HzField::DeltaB)
            {
                return Err(Error::InvalidSweep(
                    "cannot sweep the Barnett shift in paired-direction mode".into(),
                ));
            }
        }
        for m in &self.measures {
            m.selection()?;
        }
        Ok(())
    }

    /// Grid values in ascending index order; the last equals `stop` exactly.
    pub fn grid(&self) -> Vec<f64> {
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|k| {
                if k + 1 == self.count {
                    self.stop
                } else {
                    self.start + (self.stop - self.start) * (k as f64 / last)
                }
            })
            .collect()
    }

    /// Parameters at one grid value, one set per drive direction.
    pub fn point_params(&self, value: f64) -> Vec<PhysicalParams> {
        let mut params = self.base.clone();
        self.axis.apply(&mut params, value);
        match self.delta_b_pair {
            None => vec![params],
            Some(mag) => {
                let mut pos = params.clone();
                pos.delta_b = mag * params.omega_b;
                let mut neg = params;
                neg.delta_b = -mag * neg.omega_b;
                vec![pos, neg]
            }
        }
    }
}

/// Every intermediate object of the single-point pipeline.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub steady: SteadyState,
    pub drift: DriftMatrix,
    pub diffusion: DiffusionMatrix,
    pub stability: StabilityReport,
    /// Present only when the drift matrix passed the stability gate.
    pub covariance: Option<CovarianceMatrix>,
}

/// Runs the model up to the steady-state covariance.
pub fn analyze(params: &PhysicalParams) -> Result<Analysis> {
    let steady = steady_state(params)?;
    let drift = build_drift(params, &steady);
    let diffusion = build_diffusion(params)?;
    let stability = is_stable(&drift)?;
    let covariance = if stability.is_usable() {
        Some(solve_lyapunov(&drift, &diffusion)?)
    } else {
        None
    };
    Ok(Analysis {
        steady,
        drift,
        diffusion,
        stability,
        covariance,
    })
}

/// Results at one parameter point and one drive direction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointOutcome {
    pub stability: Option<StabilityReport>,
    /// Smallest symplectic eigenvalue of the full covariance.
    pub min_symplectic: Option<f64>,
    /// One entry per requested measure; `None` where unavailable.
    pub values: Vec<Option<f64>>,
    /// Smallest unclamped residual contangle over all tripartite measures.
    pub contangle_min_raw: Option<f64>,
    pub monogamy_violation: bool,
    pub steady_state_iterations: Option<usize>,
    pub error: Option<String>,
}

impl PointOutcome {
    fn failed(n: usize, stability: Option<StabilityReport>, error: String) -> Self {
        Self {
            stability,
            min_symplectic: None,
            values: vec![None; n],
            contangle_min_raw: None,
            monogamy_violation: false,
            steady_state_iterations: None,
            error: Some(error),
        }
    }

    /// Passed the stability gate.
    pub fn is_stable(&self) -> bool {
        self.stability.is_some_and(|s| s.is_usable())
    }
}

/// Evaluates every measure at one parameter point.
pub fn evaluate_point(params: &PhysicalParams, measures: &[Measure]) -> PointOutcome {
    let n = measures.len();
    if let Err(e) = params.validate() {
        return PointOutcome::failed(n, None, e.to_string());
    }
    let analysis = match analyze(params) {
        Ok(a) => a,
        Err(e) => return PointOutcome::failed(n, None, e.to_string()),
    };
    let Some(c) = analysis.covariance else {
        let mut out = PointOutcome::failed(n, Some(analysis.stability), "unstable".into());
        out.steady_state_iterations = Some(analysis.steady.iterations);
        return out;
    };

    let mut errors = Vec::new();
    let min_symplectic = match min_symplectic_eigenvalue(&c) {
        Ok(nu) => Some(nu),
        Err(e) => {
            errors.push(e.to_string());
            None
        }
    };
    let mut contangle_min_raw: Option<f64> = None;
    let mut monogamy_violation = false;
    let values = measures
        .iter()
        .map(|m| {
            let result = m
                .selection()
                .and_then(|sel| reduce(&c, &sel))
                .and_then(|sub| match m {
                    Measure::Bipartite(..) => log_negativity(&sub).map(|r| r.e_n),
                    Measure::Tripartite(_) => min_residual_contangle(&sub).map(|t| {
                        let raw = t.min_raw();
                        contangle_min_raw = Some(contangle_min_raw.map_or(raw, |v| v.min(raw)));
                        monogamy_violation |= t.violation();
                        t.r_min
                    }),
                    Measure::Squeezing(_) => quadrature_squeezing(&sub).map(|(v, _)| v),
                });
            match result {
                Ok(v) => Some(v),
                Err(e) => {
                    errors.push(format!("{}: {e}", m.column()));
                    None
                }
            }
        })
        .collect();

    PointOutcome {
        stability: Some(analysis.stability),
        min_symplectic,
        values,
        contangle_min_raw,
        monogamy_violation,
        steady_state_iterations: Some(analysis.steady.iterations),
        error: if errors.is_empty() {
            None
        } else {
            Some(errors.join("; "))
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    /// One outcome, or `[Δ_B > 0, Δ_B < 0]` in paired mode.
    pub outcomes: Vec<PointOutcome>,
    /// Contrast ratio per measure in paired mode (empty otherwise).
    pub contrasts: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// Values of measure `index` for outcome `direction` along the sweep.
    pub fn series(&self, index: usize, direction: usize) -> Vec<Option<f64>> {
        self.rows
            .iter()
            .map(|r| r.outcomes.get(direction).and_then(|o| o.values[index]))
            .collect()
    }

    pub fn contrast_series(&self, index: usize) -> Vec<Option<f64>> {
        self.rows
            .iter()
            .map(|r| r.contrasts.get(index).copied().flatten())
            .collect()
    }
}

fn evaluate_row(spec: &SweepSpec, value: f64) -> SweepRow {
    let outcomes: Vec<PointOutcome> = spec
        .point_params(value)
        .iter()
        .map(|p| evaluate_point(p, &spec.measures))
        .collect();
    let contrasts = if outcomes.len() == 2 {
        spec.measures
            .iter()
            .enumerate()
            .map(|(k, m)| {
                if !m.has_contrast() {
                    return None;
                }
                match (outcomes[0].values[k], outcomes[1].values[k]) {
                    (Some(pos), Some(neg)) => contrast_ratio(pos.max(0.0), neg.max(0.0)).ok(),
                    _ => None,
                }
            })
            .collect()
    } else {
        Vec::new()
    };
    SweepRow {
        value,
        outcomes,
        contrasts,
    }
}

/// Evaluates the sweep on the current rayon pool.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    spec.base.validate()?;
    let rows = spec
        .grid()
        .into_par_iter()
        .map(|value| evaluate_row(spec, value))
        .collect();
    Ok(SweepResult {
        spec: spec.clone(),
        rows,
    })
}
