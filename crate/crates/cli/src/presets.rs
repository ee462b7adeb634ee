//! Shipped parameter sets and the figure sweeps built from them.

use magnomech_core::model::{Mode, PhysicalParams};
use magnomech_core::sweep::{Measure, SweepAxis, SweepSpec};

use crate::config::{parse_config, Config, ConfigError, Source};

pub const PRESETS: [(&str, &str); 2] = [
    ("table1", include_str!("../presets/table1.toml")),
    (
        "table1-literal",
        include_str!("../presets/table1-literal.toml"),
    ),
];

pub const FIGURES: [&str; 7] = ["fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8"];

pub fn preset_source(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn load_preset(name: &str) -> Result<Config, ConfigError> {
    let text = preset_source(name).ok_or_else(|| {
        ConfigError::Invalid(vec![crate::config::Diagnostic {
            field: "preset".into(),
            line: None,
            message: format!(
                "unknown preset `{name}` (available: {})",
                PRESETS.map(|p| p.0).join(", ")
            ),
        }])
    })?;
    parse_config(text)
}

/// One unit of work produced by a figure preset.
#[derive(Debug, Clone, PartialEq)]
pub enum Job {
    Sweep(SweepSpec),
    /// The inner sweep repeated for every value of a second axis.
    Map {
        spec: SweepSpec,
        outer: SweepAxis,
        outer_values: Vec<f64>,
    },
    Wigner {
        name: String,
        params: PhysicalParams,
        mode: Mode,
    },
}

impl Job {
    pub fn name(&self) -> &str {
        match self {
            Job::Sweep(s) | Job::Map { spec: s, .. } => &s.name,
            Job::Wigner { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Figure {
    pub id: String,
    pub jobs: Vec<Job>,
    /// Per-figure settings recorded next to the preset provenance.
    pub notes: Vec<String>,
}

fn bipartite() -> Vec<Measure> {
    vec![
        Measure::Bipartite(Mode::Magnon1, Mode::Magnon2),
        Measure::Bipartite(Mode::Magnon2, Mode::Phonon),
        Measure::Bipartite(Mode::Cavity, Mode::Phonon),
    ]
}

fn tripartite() -> Vec<Measure> {
    vec![Measure::Tripartite([
        Mode::Magnon1,
        Mode::Cavity,
        Mode::Phonon,
    ])]
}

/// Same spacing rule as a sweep grid: the last value is `stop` exactly.
fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    let last = (count - 1) as f64;
    (0..count)
        .map(|k| {
            if k + 1 == count {
                stop
            } else {
                start + (stop - start) * (k as f64 / last)
            }
        })
        .collect()
}

struct Builder {
    base: PhysicalParams,
}

impl Builder {
    #[allow(clippy::too_many_arguments)]
    fn sweep(
        &self,
        name: &str,
        axis: SweepAxis,
        (start, stop, count): (f64, f64, usize),
        measures: Vec<Measure>,
        delta_b: f64,
        pair: Option<f64>,
        j_over_g1: f64,
    ) -> Job {
        let mut base = self.base.clone();
        base.delta_b = delta_b * base.omega_b;
        base.j = j_over_g1 * base.g1;
        Job::Sweep(SweepSpec {
            name: name.into(),
            base,
            axis,
            start,
            stop,
            count,
            measures,
            delta_b_pair: pair,
        })
    }
}

fn tag(x: f64) -> String {
    let s = format!("{:.2}", x.abs());
    let sign = if x > 0.0 {
        "p"
    } else if x < 0.0 {
        "m"
    } else {
        ""
    };
    format!("{sign}{}", s.replace('.', ""))
}

const DETUNING: (f64, f64, usize) = (-2.0, 1.0, 301);
const TEMPERATURE: (f64, f64, usize) = (0.0, 0.25, 251);
const COUPLING: (f64, f64, usize) = (0.0, 2.5, 251);
const BARNETT: [f64; 3] = [0.2, 0.0, -0.2];
const CONTRAST_PAIRS: [f64; 3] = [0.15, 0.20, 0.25];

/// Sweeps for one figure id. The base configuration supplies every
/// parameter; `J` comes from the base (`J = g1` in the shipped preset)
/// except where a figure fixes it.
pub fn figure_preset(id: &str, config: &Config) -> Option<Figure> {
    let b = Builder {
        base: config.params.clone(),
    };
    let j_base = config.params.j / config.params.g1;
    let delta = SweepAxis::DeltaCOverOmegaB;
    let mut notes = vec![format!(
        "base point: delta_c = {:?} omega_b unless swept",
        (config.params.omega_c - config.params.omega_drive) / config.params.omega_b
    )];
    let jobs = match id {
        "fig2" => {
            notes.push(
                "bipartite negativities vs delta_c at |delta_B| = 0.2 omega_b, J = 0 and J = g1"
                    .into(),
            );
            vec![
                b.sweep("fig2_j0", delta, DETUNING, bipartite(), 0.0, Some(0.2), 0.0),
                b.sweep(
                    "fig2_jg1",
                    delta,
                    DETUNING,
                    bipartite(),
                    0.0,
                    Some(0.2),
                    1.0,
                ),
            ]
        }
        "fig3" => {
            notes.push(
                "bipartite negativities over the (delta_c, delta_m2) plane with J = delta_B = 0"
                    .into(),
            );
            let Job::Sweep(spec) = b.sweep(
                "fig3_map",
                delta,
                (-2.0, 1.0, 61),
                bipartite(),
                0.0,
                None,
                0.0,
            ) else {
                unreachable!()
            };
            vec![Job::Map {
                spec,
                outer: SweepAxis::DeltaM2OverOmegaB,
                outer_values: linspace(-2.0, 1.0, 61),
            }]
        }
        "fig4" => {
            notes.push("bipartite negativities vs temperature for delta_B in {0.2, 0, -0.2} omega_b; J taken from the base configuration".into());
            BARNETT
                .iter()
                .map(|&d| {
                    let name = format!("fig4_db{}", tag(d));
                    b.sweep(
                        &name,
                        SweepAxis::TemperatureK,
                        TEMPERATURE,
                        bipartite(),
                        d,
                        None,
                        j_base,
                    )
                })
                .collect()
        }
        "fig5" => {
            notes.push(
                "bipartite negativities vs J/g1 for delta_B in {0.2, 0, -0.2} omega_b".into(),
            );
            BARNETT
                .iter()
                .map(|&d| {
                    let name = format!("fig5_db{}", tag(d));
                    b.sweep(
                        &name,
                        SweepAxis::JOverG1,
                        COUPLING,
                        bipartite(),
                        d,
                        None,
                        0.0,
                    )
                })
                .collect()
        }
        "fig6" => {
            notes.push("single-mode Wigner functions at delta_B = +-0.2 omega_b".into());
            let mut jobs = Vec::new();
            for d in [0.2, -0.2] {
                for mode in Mode::ALL {
                    let mut params = config.params.clone();
                    params.delta_b = d * params.omega_b;
                    params.j = j_base * params.g1;
                    jobs.push(Job::Wigner {
                        name: format!("fig6_{mode}_db{}", tag(d)),
                        params,
                        mode,
                    });
                }
            }
            jobs
        }
        "fig7" => {
            notes.push(
                "bipartite contrast ratios vs delta_c for |delta_B| in {0.15, 0.20, 0.25} omega_b"
                    .into(),
            );
            CONTRAST_PAIRS
                .iter()
                .map(|&m| {
                    let name = format!("fig7_pair{}", tag(m).trim_start_matches('p'));
                    b.sweep(&name, delta, DETUNING, bipartite(), 0.0, Some(m), j_base)
                })
                .collect()
        }
        "fig8" => {
            notes.push(
                "tripartite m1-c-b residual contangle vs delta_c, T and J/g1, and its contrast"
                    .into(),
            );
            let mut jobs = Vec::new();
            for (panel, axis, range) in [
                ("a", delta, DETUNING),
                ("b", SweepAxis::TemperatureK, TEMPERATURE),
                ("c", SweepAxis::JOverG1, COUPLING),
            ] {
                for d in BARNETT {
                    let name = format!("fig8{panel}_db{}", tag(d));
                    jobs.push(b.sweep(&name, axis, range, tripartite(), d, None, j_base));
                }
            }
            for m in CONTRAST_PAIRS {
                let name = format!("fig8d_pair{}", tag(m).trim_start_matches('p'));
                jobs.push(b.sweep(&name, delta, DETUNING, tripartite(), 0.0, Some(m), j_base));
            }
            jobs
        }
        _ => return None,
    };
    Some(Figure {
        id: id.to_string(),
        jobs,
        notes,
    })
}

/// Provenance of a figure run: the base file's, with the figure-fixed `J`
/// marked as published.
pub fn figure_provenance(config: &Config, figure: &Figure) -> crate::config::Provenance {
    let mut prov = config.provenance.clone();
    if let Some(entry) = prov.entries.get("j_hz") {
        prov.set("j_hz", entry.0, Source::Paper);
    }
    let mut note = prov.note.take().unwrap_or_default();
    for n in &figure.notes {
        if !note.is_empty() {
            note.push_str("; ");
        }
        note.push_str(n);
    }
    prov.note = Some(note);
    prov
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table1() -> Config {
        load_preset("table1").unwrap()
    }

    #[test]
    fn table1_values() {
        let c = table1();
        let w = |hz: f64| 2.0 * std::f64::consts::PI * hz;
        assert_eq!(c.params.g1, w(3.2e6));
        assert_eq!(c.params.g2, w(2.6e6));
        assert_eq!(c.params.temperature, 0.01);
        assert!(c.provenance.has_assumptions());
        let d = c.params.detunings();
        assert!((d.delta_c / c.params.omega_b + 1.0).abs() < 1e-6);
        assert!((d.delta_m1 / c.params.omega_b - 0.95).abs() < 1e-6);
        assert!((d.delta_m2 / c.params.omega_b + 1.0).abs() < 1e-6);
        assert!(load_preset("table1-literal").is_ok());
        assert!(load_preset("nope").is_err());
    }

    #[test]
    fn figure_shapes() {
        let c = table1();
        let count = |id: &str| figure_preset(id, &c).unwrap().jobs.len();
        assert_eq!(count("fig2"), 2);
        assert_eq!(count("fig4"), 3);
        assert_eq!(count("fig6"), 8);
        assert_eq!(count("fig7"), 3);
        assert_eq!(count("fig8"), 12);
        assert!(figure_preset("fig9", &c).is_none());

        let fig4 = figure_preset("fig4", &c).unwrap();
        let deltas: Vec<f64> = fig4
            .jobs
            .iter()
            .map(|j| match j {
                Job::Sweep(s) => {
                    assert_eq!((s.start, s.stop), (0.0, 0.25));
                    assert_eq!(s.axis, SweepAxis::TemperatureK);
                    s.base.delta_b / s.base.omega_b
                }
                _ => panic!("fig4 is all sweeps"),
            })
            .collect();
        assert_eq!(deltas, vec![0.2, 0.0, -0.2]);

        let fig7 = figure_preset("fig7", &c).unwrap();
        let pairs: Vec<_> = fig7
            .jobs
            .iter()
            .map(|j| match j {
                Job::Sweep(s) => s.delta_b_pair.unwrap(),
                _ => panic!(),
            })
            .collect();
        assert_eq!(pairs, vec![0.15, 0.20, 0.25]);
        let names: Vec<_> = fig7.jobs.iter().map(Job::name).collect();
        assert_eq!(names, ["fig7_pair015", "fig7_pair020", "fig7_pair025"]);
    }

    #[test]
    fn every_figure_spec_validates() {
        let c = table1();
        for id in FIGURES {
            for job in figure_preset(id, &c).unwrap().jobs {
                match job {
                    Job::Sweep(s) | Job::Map { spec: s, .. } => s.validate().unwrap(),
                    Job::Wigner { params, .. } => params.validate().unwrap(),
                }
            }
        }
    }
}
