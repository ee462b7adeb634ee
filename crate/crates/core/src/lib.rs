//! Steady-state entanglement, Wigner functions and nonreciprocity of a
//! driven cavity–magnon–magnon–phonon system with a Barnett frequency shift.
//!
//! The pipeline for one parameter point is
//! [`model::steady_state`] → [`model::build_drift`] / [`model::build_diffusion`]
//! → [`model::is_stable`] → [`lyapunov::solve_lyapunov`] →
//! [`gaussian::reduce`] → [`measures`] / [`wigner`]. [`sweep`] runs that
//! pipeline over a parameter grid in parallel.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod error;
pub mod gaussian;
pub mod lyapunov;
pub mod measures;
pub mod model;
pub mod sweep;
pub mod wigner;

pub use error::{Error, Result};
pub use gaussian::{CovarianceMatrix, ModeSelection};
pub use measures::{BipartiteResult, TripartiteResult};
pub use model::{
    CouplingDrive, Detunings, DiffusionMatrix, DriftMatrix, Mode, PhysicalParams, StabilityReport,
    SteadyState,
};
pub use sweep::{SweepAxis, SweepResult, SweepRow, SweepSpec};
pub use wigner::WignerGrid;
