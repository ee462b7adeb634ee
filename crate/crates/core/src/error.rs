use thiserror::Error;

use crate::model::SteadyState;

/// Errors raised while building or analysing the linearized model.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("steady state did not converge after {iterations} iterations (last relative change {last_change:e})")]
    NoConvergence {
        iterations: usize,
        last_change: f64,
        last_iterate: Box<SteadyState>,
    },

    #[error("singular configuration: {0}")]
    SingularConfiguration(String),

    #[error("steady-state oracle failed: {0}")]
    OracleFailure(String),

    #[error("drift matrix is not stable (spectral abscissa {abscissa:e})")]
    Unstable { abscissa: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(
        "ill-conditioned Lyapunov solve (condition estimate {condition:e}, residual {residual:e})"
    )]
    IllConditioned { condition: f64, residual: f64 },

    #[error("integral oracle could not reach tolerance {tol:e} within horizon {horizon:e} (tail {tail:e})")]
    Accuracy { horizon: f64, tol: f64, tail: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid mode selection: {0}")]
    InvalidSelection(String),

    #[error("unphysical covariance matrix (minimum symplectic eigenvalue {nu_min})")]
    Unphysical { nu_min: f64 },

    #[error("singular covariance matrix")]
    SingularCovariance,

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
