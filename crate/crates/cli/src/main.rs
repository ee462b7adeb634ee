use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use magnomech_cli::config::{load_config, Config};
use magnomech_cli::presets::{
    figure_preset, figure_provenance, load_preset, preset_source, FIGURES, PRESETS,
};
use magnomech_cli::runner::{mode_wigner, run_job, Format, Output};
use magnomech_core::gaussian::{symplectic_eigenvalues, PHYSICALITY_TOL};
use magnomech_core::lyapunov::{
    lyapunov_integral_oracle, lyapunov_residual, random_stable_system, solve_lyapunov,
    RESIDUAL_REL_TOL,
};
use magnomech_core::model::Mode;
use magnomech_core::sweep::{analyze, run_sweep};
use nalgebra::DMatrix;

/// Steady-state entanglement and nonreciprocity sweeps for a four-mode
/// cavity magnomechanical system.
#[derive(Parser)]
#[command(name = "magnomech", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,

    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Directory for output files. `run` and `wigner` print to stdout
    /// when unset; `figure` defaults to `./figures`.
    #[arg(long, global = true, env = "MAGNOMECH_OUT_DIR")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described in a config file (or `preset:<name>`).
    Run { config: String },
    /// Run every sweep of a figure preset.
    Figure {
        /// One of fig2 .. fig8.
        id: String,
        /// Base parameter preset.
        #[arg(long, default_value = "table1")]
        preset: String,
    },
    /// Steady-state Wigner function of one mode.
    Wigner {
        config: String,
        #[arg(long)]
        mode: Mode,
    },
    /// Stability and physicality report, without writing results.
    Check {
        config: String,
        /// Also solve a corpus of random stable Lyapunov systems from this seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print a shipped preset as an editable config file.
    Preset { name: String },
}

enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_ASSUMED: u8 = 3;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Config(e)) => {
            eprintln!("configuration error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn config_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Config(e.into())
}

fn runtime_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Runtime(e.into())
}

fn load(spec: &str) -> Result<Config, Failure> {
    match spec.strip_prefix("preset:") {
        Some(name) => load_preset(name).map_err(config_err),
        None => load_config(Path::new(spec)).map_err(config_err),
    }
}

fn banner(lines: &[String]) {
    let mut err = std::io::stderr().lock();
    for line in lines {
        let _ = writeln!(err, "{line}");
    }
}

fn status(assumed: bool) -> u8 {
    if assumed {
        EXIT_ASSUMED
    } else {
        0
    }
}

fn write_output(out: Option<&Path>, file: &str, content: &str) -> Result<(), Failure> {
    match out {
        None => std::io::stdout()
            .write_all(content.as_bytes())
            .map_err(runtime_err),
        Some(dir) => {
            fs::create_dir_all(dir)
                .with_context(|| format!("creating {}", dir.display()))
                .map_err(runtime_err)?;
            let path = dir.join(file);
            fs::write(&path, content)
                .with_context(|| format!("writing {}", path.display()))
                .map_err(runtime_err)?;
            eprintln!("wrote {}", path.display());
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(config_err(anyhow!("--threads must be at least 1")));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(runtime_err)?;
    }
    let ext = cli.format.extension();
    match &cli.command {
        Command::Run { config } => {
            let config = load(config)?;
            let spec = config
                .sweep
                .clone()
                .ok_or_else(|| config_err(anyhow!("`run` needs a [sweep] section")))?;
            banner(&config.provenance.banner());
            let result = run_sweep(&spec).map_err(runtime_err)?;
            let failed = result
                .rows
                .iter()
                .flat_map(|r| &r.outcomes)
                .filter(|o| !o.is_stable() || o.error.is_some())
                .count();
            if failed > 0 {
                eprintln!("{failed} point evaluation(s) unstable or failed; marked NA");
            }
            let text = Output::Sweep(result).render(cli.format, &config.provenance);
            write_output(cli.out.as_deref(), &format!("{}.{ext}", spec.name), &text)?;
            Ok(status(config.provenance.has_assumptions()))
        }
        Command::Figure { id, preset } => {
            let config = load_preset(preset).map_err(config_err)?;
            let figure = figure_preset(id, &config).ok_or_else(|| {
                config_err(anyhow!(
                    "unknown figure `{id}` (available: {})",
                    FIGURES.join(", ")
                ))
            })?;
            let provenance = figure_provenance(&config, &figure);
            banner(&provenance.banner());
            let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("figures"));
            for job in &figure.jobs {
                let output = run_job(job)
                    .with_context(|| format!("job {}", job.name()))
                    .map_err(runtime_err)?;
                let text = output.render(cli.format, &provenance);
                write_output(Some(&dir), &format!("{}.{ext}", job.name()), &text)?;
            }
            Ok(status(provenance.has_assumptions()))
        }
        Command::Wigner { config, mode } => {
            let config = load(config)?;
            banner(&config.provenance.banner());
            let grid = mode_wigner(&config.params, *mode, config.wigner).map_err(runtime_err)?;
            let text = Output::Wigner(grid).render(cli.format, &config.provenance);
            write_output(cli.out.as_deref(), &format!("wigner_{mode}.{ext}"), &text)?;
            Ok(status(config.provenance.has_assumptions()))
        }
        Command::Check { config, seed } => {
            let config = load(config)?;
            banner(&config.provenance.banner());
            let ok = check(&config, *seed).map_err(runtime_err)?;
            if ok {
                Ok(status(config.provenance.has_assumptions()))
            } else {
                Err(runtime_err(anyhow!("check failed")))
            }
        }
        Command::Preset { name } => {
            let text = preset_source(name).ok_or_else(|| {
                config_err(anyhow!(
                    "unknown preset `{name}` (available: {})",
                    PRESETS.map(|p| p.0).join(", ")
                ))
            })?;
            print!("{text}");
            Ok(0)
        }
    }
}

/// Prints a report; returns whether everything passed.
fn check(config: &Config, seed: Option<u64>) -> anyhow::Result<bool> {
    let mut ok = true;
    let analysis = analyze(&config.params)?;
    let s = analysis.stability;
    println!(
        "base point: {} (spectral abscissa {:e} rad/s{})",
        if s.stable { "stable" } else { "UNSTABLE" },
        s.spectral_abscissa,
        if s.marginal { ", marginal" } else { "" }
    );
    match &analysis.covariance {
        Some(c) => {
            let nus = symplectic_eigenvalues(c)?;
            let physical = nus[0] >= 0.5 - PHYSICALITY_TOL;
            ok &= physical;
            println!(
                "symplectic eigenvalues: {:?} ({})",
                nus,
                if physical { "physical" } else { "UNPHYSICAL" }
            );
        }
        None => ok = false,
    }

    if let Some(spec) = &config.sweep {
        let result = run_sweep(spec)?;
        let (mut stable, mut unstable, mut unphysical, mut violations) = (0, 0, 0, 0);
        for o in result.rows.iter().flat_map(|r| &r.outcomes) {
            if o.is_stable() {
                stable += 1;
            } else {
                unstable += 1;
            }
            if o.min_symplectic
                .is_some_and(|nu| nu < 0.5 - PHYSICALITY_TOL)
            {
                unphysical += 1;
            }
            if o.monogamy_violation {
                violations += 1;
            }
        }
        ok &= unphysical == 0;
        println!(
            "sweep {}: {stable} stable, {unstable} unstable, {unphysical} unphysical, {violations} monogamy violations",
            spec.name
        );
    }

    if let Some(seed) = seed {
        let (mut worst_res, mut worst_dev) = (0.0_f64, 0.0_f64);
        for k in 0..100 {
            let (a, f) = random_stable_system(seed.wrapping_add(k))?;
            let c = solve_lyapunov(&a, &f)?;
            let ad = DMatrix::from_iterator(8, 8, a.0.iter().copied());
            let fd = DMatrix::from_iterator(8, 8, f.to_matrix().iter().copied());
            worst_res = worst_res.max(lyapunov_residual(&ad, c.matrix(), &fd)? / fd.amax());
            let oracle = lyapunov_integral_oracle(&ad, &fd, 1e6, 1e-16)?;
            worst_dev = worst_dev.max((c.matrix() - &oracle).norm() / oracle.norm());
        }
        let pass = worst_res <= RESIDUAL_REL_TOL && worst_dev <= 1e-6;
        ok &= pass;
        println!(
            "solver corpus (seed {seed}, 100 systems): max relative residual {worst_res:e}, max oracle deviation {worst_dev:e} ({})",
            if pass { "pass" } else { "FAIL" }
        );
    }
    Ok(ok)
}
