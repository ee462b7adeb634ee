//! Configuration, figure presets and output rendering behind the
//! `magnomech` command-line tool.

pub mod config;
pub mod emit;
pub mod presets;
pub mod runner;

pub use config::{load_config, parse_config, Config, ConfigError, Provenance, Source};
pub use presets::{figure_preset, load_preset, Figure, Job};
pub use runner::{run_job, Format, Output};
