//! TOML run configuration.
//!
//! ```toml
//! [params]            # every frequency in Hz, converted to rad/s on load
//! omega_c_hz = 1.0e10
//! ...
//! g_direct_hz = 4.8e6 # or drive_amplitude_hz (then g0_hz is required too)
//! temperature_k = 0.01
//!
//! [provenance]        # optional; unlisted keys count as user supplied
//! paper = ["omega_c_hz"]
//! assumed = ["kappa_c_hz"]
//! note = "free text"
//!
//! [sweep]             # required by `run`
//! name = "detuning"
//! parameter = "delta_c_over_omega_b"
//! start = -2.0
//! stop = 1.0
//! count = 301
//! outputs = ["E_m1m2", "R_min_m1cb"]
//! delta_b_pair = 0.2  # optional: evaluate at ±0.2 omega_b and report contrasts
//!
//! [wigner]            # optional
//! half_range_sigmas = 5.0
//! resolution = 201
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use magnomech_core::model::{CouplingDrive, PhysicalParams};
use magnomech_core::sweep::{HzField, Measure, SweepAxis, SweepSpec};
use magnomech_core::wigner::{DEFAULT_HALF_RANGE_SIGMAS, DEFAULT_RESOLUTION};
use serde::Serialize;
use toml::{Table, Value};

/// Frequency keys that must always be present.
const REQUIRED_HZ: [HzField; 13] = [
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
];
const TEMPERATURE_KEY: &str = "temperature_k";
const SECTIONS: [&str; 4] = ["params", "provenance", "sweep", "wigner"];
const SWEEP_KEYS: [&str; 7] = [
    "name",
    "parameter",
    "start",
    "stop",
    "count",
    "outputs",
    "delta_b_pair",
];
const WIGNER_KEYS: [&str; 2] = ["half_range_sigmas", "resolution"];
const PROVENANCE_KEYS: [&str; 3] = ["paper", "assumed", "note"];

/// One problem found in a configuration file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub field: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: `{}`: {}", self.field, self.message),
            None => write!(f, "`{}`: {}", self.field, self.message),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid TOML: {0}")]
    Syntax(String),
    #[error("{} configuration error(s):\n{}", .0.len(), .0.iter().map(|d| format!("  {d}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Diagnostic>),
}

/// Where a parameter value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Paper,
    Assumed,
    Config,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Paper => "paper",
            Source::Assumed => "assumed",
            Source::Config => "config",
        })
    }
}

/// Parameter values as written (in Hz or K) together with their source.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub entries: BTreeMap<String, (f64, Source)>,
    pub note: Option<String>,
}

impl Provenance {
    pub fn has_assumptions(&self) -> bool {
        self.entries.values().any(|(_, s)| *s == Source::Assumed)
    }

    /// Marks `key` as fixed by a figure definition rather than the base file.
    pub fn set(&mut self, key: &str, value: f64, source: Source) {
        self.entries.insert(key.to_string(), (value, source));
    }

    /// Human-readable banner, one line per parameter.
    pub fn banner(&self) -> Vec<String> {
        let mut lines = vec![format!("magnomech {}", env!("CARGO_PKG_VERSION"))];
        lines.push(
            "parameter provenance (paper = published value, assumed = filled in, config = user supplied):"
                .into(),
        );
        for (key, (value, source)) in &self.entries {
            lines.push(format!("  {key} = {value:?} [{source}]"));
        }
        if let Some(note) = &self.note {
            lines.push(format!("note: {note}"));
        }
        if self.has_assumptions() {
            lines.push("WARNING: results depend on assumed parameter values".into());
        }
        lines
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WignerSettings {
    pub half_range_sigmas: f64,
    pub resolution: usize,
}

impl Default for WignerSettings {
    fn default() -> Self {
        Self {
            half_range_sigmas: DEFAULT_HALF_RANGE_SIGMAS,
            resolution: DEFAULT_RESOLUTION,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub params: PhysicalParams,
    pub provenance: Provenance,
    pub sweep: Option<SweepSpec>,
    pub wigner: WignerSettings,
}

pub fn load_config(path: &Path) -> Result<Config, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

/// Parses a configuration, collecting every problem before failing.
pub fn parse_config(text: &str) -> Result<Config, ConfigError> {
    // duplicate keys are rejected by the TOML parser itself
    let doc: Table = text
        .parse()
        .map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
    let mut p = Parser {
        text,
        diags: Vec::new(),
    };

    for key in doc.keys() {
        if !SECTIONS.contains(&key.as_str()) {
            p.error(key, "", "unknown section");
        }
    }
    let empty = Table::new();
    let params_table = p.section(&doc, "params").unwrap_or(&empty);
    let (params, mut provenance) = p.params(params_table);
    if let Some(table) = p.section(&doc, "provenance") {
        p.provenance(table, &mut provenance);
    }
    let wigner = match p.section(&doc, "wigner") {
        Some(table) => p.wigner(table),
        None => WignerSettings::default(),
    };
    let sweep = p
        .section(&doc, "sweep")
        .and_then(|table| p.sweep(table, params.clone()));

    if !p.diags.is_empty() {
        return Err(ConfigError::Invalid(p.diags));
    }
    if let Err(e) = params.validate() {
        return Err(ConfigError::Invalid(vec![Diagnostic {
            field: "params".into(),
            line: None,
            message: e.to_string(),
        }]));
    }
    if let Some(spec) = &sweep {
        if let Err(e) = spec.validate() {
            return Err(ConfigError::Invalid(vec![Diagnostic {
                field: "sweep".into(),
                line: line_of(text, "sweep", ""),
                message: e.to_string(),
            }]));
        }
    }
    Ok(Config {
        params,
        provenance,
        sweep,
        wigner,
    })
}

struct Parser<'a> {
    text: &'a str,
    diags: Vec<Diagnostic>,
}

impl<'a> Parser<'a> {
    fn error(&mut self, field: &str, section: &str, message: impl Into<String>) {
        let line = if section.is_empty() {
            line_of(self.text, field, "")
        } else {
            line_of(self.text, section, field)
        };
        let field = if section.is_empty() {
            field.to_string()
        } else {
            format!("{section}.{field}")
        };
        self.diags.push(Diagnostic {
            field,
            line,
            message: message.into(),
        });
    }

    fn section<'t>(&mut self, doc: &'t Table, name: &str) -> Option<&'t Table> {
        match doc.get(name) {
            None => {
                if name == "params" {
                    self.diags.push(Diagnostic {
                        field: "params".into(),
                        line: None,
                        message: "missing required section".into(),
                    });
                }
                None
            }
            Some(Value::Table(t)) => Some(t),
            Some(_) => {
                self.error(name, "", "expected a table");
                None
            }
        }
    }

    fn number(&mut self, table: &Table, section: &str, key: &str) -> Option<f64> {
        match table.get(key) {
            None => None,
            Some(Value::Float(v)) => Some(*v),
            Some(Value::Integer(v)) => Some(*v as f64),
            Some(_) => {
                self.error(key, section, "expected a number");
                None
            }
        }
    }

    fn check_keys(&mut self, table: &Table, section: &str, allowed: &[&str]) {
        for key in table.keys() {
            if !allowed.contains(&key.as_str()) {
                self.error(key, section, "unknown key");
            }
        }
    }

    fn params(&mut self, table: &Table) -> (PhysicalParams, Provenance) {
        let allowed: Vec<&str> = HzField::ALL
            .iter()
            .map(|f| f.key())
            .chain([TEMPERATURE_KEY])
            .collect();
        self.check_keys(table, "params", &allowed);

        let mut params = PhysicalParams {
            omega_c: 0.0,
            omega_m1: 0.0,
            omega_m2: 0.0,
            omega_b: 0.0,
            omega_drive: 0.0,
            delta_b: 0.0,
            kappa_c: 0.0,
            kappa_m1: 0.0,
            kappa_m2: 0.0,
            gamma_b: 0.0,
            g1: 0.0,
            g2: 0.0,
            j: 0.0,
            g0: 0.0,
            drive: CouplingDrive::Direct(0.0),
            temperature: 0.0,
        };
        let mut entries = BTreeMap::new();
        let mut missing = Vec::new();

        for field in REQUIRED_HZ {
            match self.number(table, "params", field.key()) {
                Some(v) => {
                    field.set(&mut params, v);
                    entries.insert(field.key().to_string(), (v, Source::Config));
                }
                None if !table.contains_key(field.key()) => missing.push(field.key()),
                None => {}
            }
        }
        match self.number(table, "params", TEMPERATURE_KEY) {
            Some(t) => {
                params.temperature = t;
                entries.insert(TEMPERATURE_KEY.to_string(), (t, Source::Config));
            }
            None if !table.contains_key(TEMPERATURE_KEY) => missing.push(TEMPERATURE_KEY),
            None => {}
        }

        let rabi = self.number(table, "params", HzField::DriveAmplitude.key());
        let direct = self.number(table, "params", HzField::GDirect.key());
        let g0 = self.number(table, "params", HzField::G0.key());
        match (rabi, direct) {
            (Some(_), Some(_)) => self.error(
                HzField::GDirect.key(),
                "params",
                "give exactly one of drive_amplitude_hz and g_direct_hz",
            ),
            (None, None) => missing.push("drive_amplitude_hz | g_direct_hz"),
            (Some(psi), None) => {
                HzField::DriveAmplitude.set(&mut params, psi);
                entries.insert(HzField::DriveAmplitude.key().into(), (psi, Source::Config));
                match g0 {
                    Some(g0) => {
                        HzField::G0.set(&mut params, g0);
                        entries.insert(HzField::G0.key().into(), (g0, Source::Config));
                    }
                    None => missing.push("g0_hz"),
                }
            }
            (None, Some(g)) => {
                HzField::GDirect.set(&mut params, g);
                entries.insert(HzField::GDirect.key().into(), (g, Source::Config));
                if g0.is_some() {
                    self.error(
                        HzField::G0.key(),
                        "params",
                        "g0_hz has no effect with g_direct_hz; remove it",
                    );
                }
            }
        }
        for key in missing {
            self.diags.push(Diagnostic {
                field: format!("params.{key}"),
                line: None,
                message: "missing required key".into(),
            });
        }
        (
            params,
            Provenance {
                entries,
                note: None,
            },
        )
    }

    fn provenance(&mut self, table: &Table, provenance: &mut Provenance) {
        self.check_keys(table, "provenance", &PROVENANCE_KEYS);
        for (list, source) in [("paper", Source::Paper), ("assumed", Source::Assumed)] {
            let Some(value) = table.get(list) else {
                continue;
            };
            let Some(items) = value.as_array() else {
                self.error(list, "provenance", "expected an array of parameter keys");
                continue;
            };
            for item in items {
                let Some(key) = item.as_str() else {
                    self.error(list, "provenance", "expected an array of parameter keys");
                    continue;
                };
                match provenance.entries.get_mut(key) {
                    Some(entry) if entry.1 == Source::Config => entry.1 = source,
                    Some(_) => self.error(list, "provenance", format!("`{key}` listed twice")),
                    None => self.error(
                        list,
                        "provenance",
                        format!("`{key}` is not a parameter in [params]"),
                    ),
                }
            }
        }
        match table.get("note") {
            None => {}
            Some(Value::String(s)) => provenance.note = Some(s.clone()),
            Some(_) => self.error("note", "provenance", "expected a string"),
        }
    }

    fn wigner(&mut self, table: &Table) -> WignerSettings {
        self.check_keys(table, "wigner", &WIGNER_KEYS);
        let mut settings = WignerSettings::default();
        if let Some(v) = self.number(table, "wigner", "half_range_sigmas") {
            if v > 0.0 && v.is_finite() {
                settings.half_range_sigmas = v;
            } else {
                self.error("half_range_sigmas", "wigner", "must be > 0");
            }
        }
        match table.get("resolution") {
            None => {}
            Some(Value::Integer(n)) if *n >= 3 => settings.resolution = *n as usize,
            Some(_) => self.error("resolution", "wigner", "expected an integer >= 3"),
        }
        settings
    }

    fn sweep(&mut self, table: &Table, base: PhysicalParams) -> Option<SweepSpec> {
        self.check_keys(table, "sweep", &SWEEP_KEYS);
        let before = self.diags.len();
        for key in ["parameter", "start", "stop", "count", "outputs"] {
            if !table.contains_key(key) {
                self.diags.push(Diagnostic {
                    field: format!("sweep.{key}"),
                    line: None,
                    message: "missing required key".into(),
                });
            }
        }
        let name = match table.get("name") {
            None => "sweep".to_string(),
            Some(Value::String(s)) => s.clone(),
            Some(_) => {
                self.error("name", "sweep", "expected a string");
                String::new()
            }
        };
        let axis = match table.get("parameter") {
            Some(Value::String(s)) => match s.parse::<SweepAxis>() {
                Ok(axis) => Some(axis),
                Err(e) => {
                    self.error("parameter", "sweep", e.to_string());
                    None
                }
            },
            Some(_) => {
                self.error("parameter", "sweep", "expected a string");
                None
            }
            None => None,
        };
        let start = self.number(table, "sweep", "start");
        let stop = self.number(table, "sweep", "stop");
        let count = match table.get("count") {
            Some(Value::Integer(n)) if *n >= 2 => Some(*n as usize),
            Some(_) => {
                self.error("count", "sweep", "expected an integer >= 2");
                None
            }
            None => None,
        };
        let mut measures = Vec::new();
        match table.get("outputs") {
            Some(Value::Array(items)) if !items.is_empty() => {
                for item in items {
                    match item.as_str().map(str::parse::<Measure>) {
                        Some(Ok(m)) => measures.push(m),
                        Some(Err(e)) => self.error("outputs", "sweep", e.to_string()),
                        None => self.error("outputs", "sweep", "expected strings"),
                    }
                }
            }
            Some(_) => self.error(
                "outputs",
                "sweep",
                "expected a non-empty array of output names",
            ),
            None => {}
        }
        let delta_b_pair = self.number(table, "sweep", "delta_b_pair");
        if self.diags.len() > before {
            return None;
        }
        Some(SweepSpec {
            name,
            base,
            axis: axis?,
            start: start?,
            stop: stop?,
            count: count?,
            measures,
            delta_b_pair,
        })
    }
}

/// 1-based line of `key = ...` inside `[section]`, or of the section header
/// itself when `key` is empty.
fn line_of(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (k, line) in text.lines().enumerate() {
        let t = line.trim();
        if let Some(header) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            current = header.trim().to_string();
            if key.is_empty() && current == section {
                return Some(k + 1);
            }
            continue;
        }
        if key.is_empty() || current != section {
            continue;
        }
        if let Some((lhs, _)) = t.split_once('=') {
            if lhs.trim().trim_matches('"') == key {
                return Some(k + 1);
            }
        }
    }
    None
}
