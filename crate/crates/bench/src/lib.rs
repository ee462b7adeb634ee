//! Fixtures shared by the benchmarks.

use std::f64::consts::PI;

use magnomech_core::model::Mode;
use magnomech_core::sweep::{Measure, SweepAxis, SweepSpec};
use magnomech_core::{CouplingDrive, PhysicalParams};

fn w(hz: f64) -> f64 {
    2.0 * PI * hz
}

/// A stable, entangled operating point.
pub fn operating_point() -> PhysicalParams {
    let omega_b = w(10e6);
    let omega_drive = w(10.01e9);
    PhysicalParams {
        omega_c: omega_drive - omega_b,
        omega_m1: omega_drive + 0.95 * omega_b,
        omega_m2: omega_drive - omega_b,
        omega_b,
        omega_drive,
        delta_b: 0.0,
        kappa_c: w(1e6),
        kappa_m1: w(10e6),
        kappa_m2: w(10e6),
        gamma_b: w(100.0),
        g1: w(3.2e6),
        g2: w(2.6e6),
        j: w(3.2e6),
        g0: 0.0,
        drive: CouplingDrive::Direct(w(4.8e6)),
        temperature: 0.01,
    }
}

/// Detuning sweep with the three bipartite measures.
pub fn detuning_sweep(count: usize) -> SweepSpec {
    SweepSpec {
        name: "bench".into(),
        base: operating_point(),
        axis: SweepAxis::DeltaCOverOmegaB,
        start: -2.0,
        stop: 1.0,
        count,
        measures: vec![
            Measure::Bipartite(Mode::Magnon1, Mode::Magnon2),
            Measure::Bipartite(Mode::Magnon2, Mode::Phonon),
            Measure::Bipartite(Mode::Cavity, Mode::Phonon),
        ],
        delta_b_pair: None,
    }
}
