//! Executes preset jobs and renders their results.

use magnomech_core::gaussian::{reduce, ModeSelection};
use magnomech_core::model::{Mode, PhysicalParams};
use magnomech_core::sweep::{analyze, run_sweep, SweepResult};
use magnomech_core::wigner::{wigner_grid, WignerGrid};
use magnomech_core::{Error, Result};

use crate::config::{Provenance, WignerSettings};
use crate::emit::{self, MapResult};
use crate::presets::Job;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
    #[value(name = "svg-plot")]
    SvgPlot,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::SvgPlot => "svg",
        }
    }
}

pub enum Output {
    Sweep(SweepResult),
    Map(MapResult),
    Wigner(WignerGrid),
}

impl Output {
    pub fn render(&self, format: Format, provenance: &Provenance) -> String {
        match (self, format) {
            (Output::Sweep(r), Format::Csv) => emit::sweep_csv(r, provenance),
            (Output::Sweep(r), Format::Json) => emit::sweep_json(r, provenance),
            (Output::Sweep(r), Format::SvgPlot) => emit::sweep_svg(r),
            (Output::Map(m), Format::Csv) => emit::map_csv(m, provenance),
            (Output::Map(m), Format::Json) => emit::map_json(m, provenance),
            (Output::Map(m), Format::SvgPlot) => emit::map_svg(m),
            (Output::Wigner(g), Format::Csv) => emit::wigner_csv(g, provenance),
            (Output::Wigner(g), Format::Json) => emit::wigner_json(g, provenance),
            (Output::Wigner(g), Format::SvgPlot) => emit::wigner_svg(g),
        }
    }
}

/// Steady-state Wigner function of one mode.
pub fn mode_wigner(
    params: &PhysicalParams,
    mode: Mode,
    settings: WignerSettings,
) -> Result<WignerGrid> {
    let analysis = analyze(params)?;
    let c = analysis.covariance.ok_or(Error::Unstable {
        abscissa: analysis.stability.spectral_abscissa,
    })?;
    let single = reduce(&c, &ModeSelection::new(&[mode])?)?;
    wigner_grid(&single, settings.half_range_sigmas, settings.resolution)
}

pub fn run_job(job: &Job) -> Result<Output> {
    match job {
        Job::Sweep(spec) => run_sweep(spec).map(Output::Sweep),
        Job::Map {
            spec,
            outer,
            outer_values,
        } => {
            let sweeps = outer_values
                .iter()
                .map(|&v| {
                    let mut s = spec.clone();
                    outer.apply(&mut s.base, v);
                    run_sweep(&s)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Output::Map(MapResult {
                outer_name: outer.name().to_string(),
                outer_values: outer_values.clone(),
                sweeps,
            }))
        }
        Job::Wigner { params, mode, .. } => {
            mode_wigner(params, *mode, WignerSettings::default()).map(Output::Wigner)
        }
    }
}
