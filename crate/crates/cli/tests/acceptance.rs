//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::collections::BTreeMap;
use std::process::{Command, ExitCode};
use std::time::Instant;

use magnomech_cli::config::WignerSettings;
use magnomech_cli::presets::{figure_preset, load_preset, Job, FIGURES};
use magnomech_cli::runner::{mode_wigner, run_job, Output};
use magnomech_cli::Config;
use magnomech_core::gaussian::{symplectic_eigenvalues, two_mode_squeezed, PHYSICALITY_TOL};
use magnomech_core::lyapunov::{
    lyapunov_integral_oracle, lyapunov_residual, random_stable_system, solve_lyapunov,
    RESIDUAL_REL_TOL,
};
use magnomech_core::measures::log_negativity;
use magnomech_core::sweep::{analyze, run_sweep, Measure};
use magnomech_core::wigner::{contour_ellipse, wigner_grid};
use magnomech_core::{CovarianceMatrix, Mode, SweepAxis, SweepResult, SweepSpec};
use nalgebra::DMatrix;

type Verdict = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Every figure's outputs, computed once.
struct Figures {
    config: Config,
    outputs: BTreeMap<String, Output>,
}

impl Figures {
    fn compute() -> Self {
        let config = load_preset("table1").expect("shipped preset parses");
        let mut outputs = BTreeMap::new();
        for id in FIGURES {
            for job in figure_preset(id, &config).unwrap().jobs {
                let out = run_job(&job).unwrap_or_else(|e| panic!("{}: {e}", job.name()));
                outputs.insert(job.name().to_string(), out);
            }
        }
        Self { config, outputs }
    }

    fn sweep(&self, name: &str) -> &SweepResult {
        match &self.outputs[name] {
            Output::Sweep(r) => r,
            _ => panic!("{name} is not a sweep"),
        }
    }

    fn sweeps_with_prefix<'a>(
        &'a self,
        prefix: &'a str,
    ) -> impl Iterator<Item = (&'a str, &'a SweepResult)> {
        self.outputs
            .iter()
            .filter_map(move |(name, out)| match out {
                Output::Sweep(r) if name.starts_with(prefix) => Some((name.as_str(), r)),
                _ => None,
            })
    }

    /// Every sweep, with map slices flattened.
    fn all_sweeps(&self) -> Vec<(&str, &SweepResult)> {
        let mut v = Vec::new();
        for (name, out) in &self.outputs {
            match out {
                Output::Sweep(r) => v.push((name.as_str(), r)),
                Output::Map(m) => v.extend(m.sweeps.iter().map(|r| (name.as_str(), r))),
                Output::Wigner(_) => {}
            }
        }
        v
    }
}

fn lyapunov_corpus() -> Verdict {
    let start = Instant::now();
    let (mut worst_res, mut worst_dev) = (0.0_f64, 0.0_f64);
    for seed in 0..100 {
        let (a, f) = random_stable_system(seed).map_err(|e| e.to_string())?;
        let c = solve_lyapunov(&a, &f).map_err(|e| format!("seed {seed}: {e}"))?;
        let ad = DMatrix::from_iterator(8, 8, a.0.iter().copied());
        let fd = DMatrix::from_iterator(8, 8, f.to_matrix().iter().copied());
        let res = lyapunov_residual(&ad, c.matrix(), &fd).map_err(|e| e.to_string())? / fd.amax();
        let oracle = lyapunov_integral_oracle(&ad, &fd, 1e6, 1e-16).map_err(|e| e.to_string())?;
        let dev = (c.matrix() - &oracle).norm() / oracle.norm();
        ensure(res <= RESIDUAL_REL_TOL, || {
            format!("seed {seed}: relative residual {res:e}")
        })?;
        ensure(dev <= 1e-6, || {
            format!("seed {seed}: oracle deviation {dev:e}")
        })?;
        worst_res = worst_res.max(res);
        worst_dev = worst_dev.max(dev);
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 5.0, || format!("took {secs:.2} s"))?;
    Ok(format!(
        "max residual/|F| {worst_res:.1e}, max oracle deviation {worst_dev:.1e}, {secs:.2} s"
    ))
}

fn squeezed_references() -> Verdict {
    let mut worst = 0.0_f64;
    for k in 0..=40 {
        let r = 0.05 * k as f64;
        let e = log_negativity(&two_mode_squeezed(r))
            .map_err(|e| e.to_string())?
            .e_n;
        let err = (e - 2.0 * r).abs();
        ensure(err <= 1e-12 * (1.0 + 2.0 * r), || {
            format!("r = {r}: E_N = {e}")
        })?;
        worst = worst.max(err);
    }
    let vacuum = CovarianceMatrix::new(DMatrix::identity(4, 4) * 0.5).unwrap();
    let e0 = log_negativity(&vacuum).map_err(|e| e.to_string())?.e_n;
    ensure(e0 == 0.0, || format!("vacuum E_N = {e0:e}"))?;
    Ok(format!(
        "41 squeezing strengths, max |E_N - 2r| {worst:.1e}; vacuum exactly 0"
    ))
}

fn physicality(figs: &Figures) -> Verdict {
    let (mut checked, mut worst) = (0usize, f64::INFINITY);
    for (name, r) in figs.all_sweeps() {
        for row in &r.rows {
            for o in row.outcomes.iter().filter(|o| o.is_stable()) {
                let nu = o
                    .min_symplectic
                    .ok_or_else(|| format!("{name}: stable point without nu_min"))?;
                ensure(nu >= 0.5 - PHYSICALITY_TOL, || {
                    format!("{name} at {}: nu_min {nu}", row.value)
                })?;
                worst = worst.min(nu);
                checked += 1;
            }
        }
    }
    for job in figure_preset("fig6", &figs.config).unwrap().jobs {
        if let Job::Wigner { params, name, .. } = job {
            let c = analyze(&params)
                .unwrap()
                .covariance
                .ok_or(format!("{name} unstable"))?;
            let nu = symplectic_eigenvalues(&c).unwrap()[0];
            ensure(nu >= 0.5 - PHYSICALITY_TOL, || {
                format!("{name}: nu_min {nu}")
            })?;
            checked += 1;
        }
    }
    ensure(checked > 0, || "no stable points".into())?;
    Ok(format!(
        "{checked} stable points, smallest nu_min {worst:.6}"
    ))
}

fn nonreciprocal_window(figs: &Figures) -> Verdict {
    let r = figs.sweep("fig2_jg1");
    let mut hits = Vec::new();
    for (k, m) in r.spec.measures.iter().enumerate() {
        for row in &r.rows {
            let pos = row.outcomes[0].values[k];
            let neg = row.outcomes[1].values[k];
            if let (Some(p), Some(0.0), Some(1.0)) = (pos, neg, row.contrasts[k]) {
                if p > 0.0 {
                    hits.push((m.column(), row.value));
                }
            }
        }
    }
    let first = hits
        .first()
        .ok_or("no point with E+ > 0, E- = 0 and X = 1")?;
    Ok(format!(
        "{} window points, first {} at delta_c/omega_b = {:.2}",
        hits.len(),
        first.0,
        first.1
    ))
}

/// Non-increasing after the peak, reaches zero inside the range. Returns
/// the first temperature at which the series is zero.
fn thermal_profile(
    name: &str,
    col: &str,
    r: &SweepResult,
    series: &[Option<f64>],
) -> Result<f64, String> {
    let values: Vec<f64> = series
        .iter()
        .map(|v| v.ok_or_else(|| format!("{name} {col}: missing value")))
        .collect::<Result<_, _>>()?;
    let peak = values
        .iter()
        .enumerate()
        .fold(0, |best, (i, v)| if *v > values[best] { i } else { best });
    for i in peak + 1..values.len() {
        ensure(values[i] <= values[i - 1] + 1e-12, || {
            format!("{name} {col}: rises at T = {}", r.rows[i].value)
        })?;
    }
    let zero = values
        .iter()
        .position(|v| *v == 0.0)
        .ok_or_else(|| format!("{name} {col}: never vanishes below {} K", r.spec.stop))?;
    Ok(r.rows[zero].value)
}

fn thermal_decay(figs: &Figures) -> Verdict {
    let mut deaths = Vec::new();
    for (name, r) in figs
        .sweeps_with_prefix("fig4_")
        .chain(figs.sweeps_with_prefix("fig8b_"))
    {
        for (k, m) in r.spec.measures.iter().enumerate() {
            let t = thermal_profile(name, &m.column(), r, &r.series(k, 0))?;
            if let Measure::Tripartite(_) = m {
                if r.spec.base.delta_b != 0.0 {
                    ensure(t <= 0.165, || format!("{name}: R_min survives to {t} K"))?;
                    deaths.push(format!("{name} {t:.3} K"));
                }
            }
        }
    }
    ensure(deaths.len() == 2, || {
        format!("expected two driven R_min series, got {deaths:?}")
    })?;
    Ok(format!(
        "all series decay to zero; R_min vanishes at {}",
        deaths.join(", ")
    ))
}

fn contrast_bounds(figs: &Figures) -> Verdict {
    let (mut defined, mut both_zero) = (0usize, 0usize);
    for (name, r) in figs
        .sweeps_with_prefix("fig7_")
        .chain(figs.sweeps_with_prefix("fig8d_"))
    {
        for row in &r.rows {
            for (k, x) in row.contrasts.iter().enumerate() {
                let Some(x) = *x else { continue };
                ensure((0.0..=1.0).contains(&x), || {
                    format!("{name} at {}: X = {x}", row.value)
                })?;
                defined += 1;
                let pos = row.outcomes[0].values[k];
                let neg = row.outcomes[1].values[k];
                if pos == Some(0.0) && neg == Some(0.0) {
                    ensure(x == 0.0, || {
                        format!("{name} at {}: X = {x} with both zero", row.value)
                    })?;
                    both_zero += 1;
                }
            }
        }
    }
    ensure(defined > 0, || "no contrast values".into())?;
    Ok(format!(
        "{defined} contrast values in [0, 1], {both_zero} with both directions zero"
    ))
}

fn contangle_floor(figs: &Figures) -> Verdict {
    let (mut checked, mut worst) = (0usize, f64::INFINITY);
    for (name, r) in figs.sweeps_with_prefix("fig8") {
        for row in &r.rows {
            for o in row.outcomes.iter().filter(|o| o.is_stable()) {
                let raw = o
                    .contangle_min_raw
                    .ok_or_else(|| format!("{name}: missing raw contangle"))?;
                ensure(raw >= -1e-9, || {
                    format!("{name} at {}: raw contangle {raw:e}", row.value)
                })?;
                worst = worst.min(raw);
                checked += 1;
            }
        }
    }
    ensure(checked > 0, || "no stable tripartite points".into())?;
    Ok(format!(
        "{checked} points, smallest raw contangle {worst:.3e}"
    ))
}

fn wigner_checks(figs: &Figures) -> Verdict {
    let mut worst = 0.0_f64;
    let mut count = 0;
    for (name, out) in figs.outputs.iter().filter(|(n, _)| n.starts_with("fig6_")) {
        let Output::Wigner(g) = out else { continue };
        let integral = g.trapezoid_integral();
        ensure((integral - 1.0).abs() <= 1e-3, || {
            format!("{name}: integral {integral}")
        })?;
        worst = worst.max((integral - 1.0).abs());
        count += 1;
    }
    ensure(count == 8, || format!("expected 8 grids, got {count}"))?;

    let vacuum = CovarianceMatrix::new(DMatrix::identity(2, 2) * 0.5).unwrap();
    let e = contour_ellipse(&vacuum).map_err(|e| e.to_string())?;
    ensure(
        (e.a - 1.0).abs() <= 1e-6 && (e.b - 1.0).abs() <= 1e-6,
        || format!("vacuum contour semi-axes {} {}", e.a, e.b),
    )?;
    ensure(
        (wigner_grid(&vacuum, 5.0, 201).unwrap().trapezoid_integral() - 1.0).abs() <= 1e-3,
        || "vacuum grid does not integrate to 1".into(),
    )?;

    let params = figs.config.params.clone();
    for mode in Mode::ALL {
        let g = mode_wigner(&params, mode, WignerSettings::default()).map_err(|e| e.to_string())?;
        let c = analyze(&params).unwrap().covariance.unwrap();
        let sub = magnomech_core::gaussian::reduce(
            &c,
            &magnomech_core::ModeSelection::new(&[mode]).unwrap(),
        )
        .unwrap();
        let expected = 2.0 * std::f64::consts::PI * sub.matrix().determinant().sqrt();
        let area = g.contour.area();
        ensure((area - expected).abs() <= 1e-6 * expected, || {
            format!("{mode}: contour area {area} vs {expected}")
        })?;
    }
    Ok(format!(
        "8 grids, max |integral - 1| {worst:.1e}; vacuum radius 1; contour areas match"
    ))
}

fn thread_determinism() -> Verdict {
    let run = |threads: &str| -> Result<Vec<u8>, String> {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let status = Command::new(env!("CARGO_BIN_EXE_magnomech"))
            .args([
                "figure",
                "fig2",
                "--threads",
                threads,
                "--format",
                "csv",
                "--out",
            ])
            .arg(dir.path())
            .env_remove("MAGNOMECH_OUT_DIR")
            .output()
            .map_err(|e| e.to_string())?;
        ensure(matches!(status.status.code(), Some(0 | 3)), || {
            format!(
                "exit {:?}: {}",
                status.status.code(),
                String::from_utf8_lossy(&status.stderr)
            )
        })?;
        let mut bytes = Vec::new();
        for name in ["fig2_j0.csv", "fig2_jg1.csv"] {
            bytes.extend(std::fs::read(dir.path().join(name)).map_err(|e| format!("{name}: {e}"))?);
        }
        Ok(bytes)
    };
    let one = run("1")?;
    let four = run("4")?;
    ensure(one == four, || "outputs differ".into())?;
    Ok(format!("{} bytes identical for 1 and 4 threads", one.len()))
}

fn sweep_speed(figs: &Figures) -> Verdict {
    let spec = SweepSpec {
        name: "speed".into(),
        base: figs.config.params.clone(),
        axis: SweepAxis::DeltaCOverOmegaB,
        start: -2.0,
        stop: 1.0,
        count: 500,
        measures: vec![
            Measure::Bipartite(Mode::Magnon1, Mode::Magnon2),
            Measure::Bipartite(Mode::Magnon2, Mode::Phonon),
            Measure::Bipartite(Mode::Cavity, Mode::Phonon),
        ],
        delta_b_pair: None,
    };
    let start = Instant::now();
    let r = run_sweep(&spec).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    ensure(r.rows.len() == 500, || "wrong row count".into())?;
    ensure(secs < 1.0, || format!("took {secs:.3} s"))?;
    Ok(format!("500 points in {secs:.3} s"))
}

fn main() -> ExitCode {
    let mut failures = 0;
    let mut report = |id: u32, label: &str, verdict: Verdict| match verdict {
        Ok(detail) => println!("PASS {id:>2} {label}: {detail}"),
        Err(detail) => {
            failures += 1;
            println!("FAIL {id:>2} {label}: {detail}");
        }
    };

    report(1, "lyapunov solver vs integral oracle", lyapunov_corpus());
    report(2, "two-mode squeezed references", squeezed_references());
    let figs = Figures::compute();
    report(
        3,
        "physicality at every stable figure point",
        physicality(&figs),
    );
    report(
        4,
        "one-way entanglement window",
        nonreciprocal_window(&figs),
    );
    report(5, "thermal decay of entanglement", thermal_decay(&figs));
    report(6, "contrast ratio bounds", contrast_bounds(&figs));
    report(7, "residual contangle floor", contangle_floor(&figs));
    report(8, "wigner normalisation and contours", wigner_checks(&figs));
    report(
        9,
        "thread-count determinism of figure output",
        thread_determinism(),
    );
    report(10, "sweep throughput", sweep_speed(&figs));

    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criterion/criteria failed");
        ExitCode::FAILURE
    }
}
