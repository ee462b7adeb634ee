//! CSV, JSON and SVG rendering of sweep results and Wigner grids.
//!
//! Numbers use Rust's shortest round-trip formatting, so identical results
//! always give identical bytes. Unavailable values are written as `NA` in
//! CSV, `null` in JSON, and break plotted lines in SVG.

use std::fmt::Write as _;

use magnomech_core::sweep::{PointOutcome, SweepResult};
use magnomech_core::wigner::WignerGrid;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::Provenance;

pub const NA: &str = "NA";

/// Legend lines shared by every sweep table.
const LEGEND: [&str; 4] = [
    "NA marks values that are not available: the point failed the stability gate or a computation failed",
    "stable: 1 = passed the stability gate, 0 = unstable or marginal",
    "X_<measure> = |E+ - E-| / (E+ + E-), defined as 0 when both directions vanish",
    "columns suffixed _pos/_neg are evaluated at delta_B = +|delta_B| / -|delta_B|",
];

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn comment_block(out: &mut String, provenance: &Provenance, extra: &[String]) {
    for line in provenance.banner().iter().chain(extra) {
        let _ = writeln!(out, "# {line}");
    }
}

fn suffixes(result: &SweepResult) -> Vec<&'static str> {
    if result.spec.delta_b_pair.is_some() {
        vec!["_pos", "_neg"]
    } else {
        vec![""]
    }
}

fn has_tripartite(result: &SweepResult) -> bool {
    result
        .spec
        .measures
        .iter()
        .any(|m| m.column().starts_with("R_min"))
}

fn status(o: &PointOutcome) -> &'static str {
    match (&o.stability, &o.error) {
        (None, _) => "error",
        (Some(s), _) if s.marginal => "marginal",
        (Some(s), _) if !s.stable => "unstable",
        (_, Some(_)) => "error",
        _ => "ok",
    }
}

/// Column names of a sweep table, in output order.
pub fn sweep_columns(result: &SweepResult) -> Vec<String> {
    let mut cols = vec![result.spec.axis.name().to_string()];
    let sfx = suffixes(result);
    for s in &sfx {
        cols.push(format!("stable{s}"));
        cols.push(format!("abscissa{s}"));
        cols.push(format!("nu_min{s}"));
        for m in &result.spec.measures {
            cols.push(format!("{}{s}", m.column()));
        }
    }
    if result.spec.delta_b_pair.is_some() {
        for m in result.spec.measures.iter().filter(|m| m.has_contrast()) {
            cols.push(format!("X_{}", m.column()));
        }
    }
    for s in &sfx {
        if has_tripartite(result) {
            cols.push(format!("contangle_raw{s}"));
        }
        cols.push(format!("status{s}"));
    }
    cols
}

/// Row cells aligned with [`sweep_columns`].
fn sweep_cells(result: &SweepResult) -> Vec<Vec<Option<String>>> {
    let contrast_idx: Vec<usize> = result
        .spec
        .measures
        .iter()
        .enumerate()
        .filter(|(_, m)| m.has_contrast())
        .map(|(k, _)| k)
        .collect();
    result
        .rows
        .iter()
        .map(|row| {
            let mut cells = vec![Some(num(row.value))];
            for o in &row.outcomes {
                cells.push(Some(if o.is_stable() { "1" } else { "0" }.to_string()));
                cells.push(o.stability.map(|s| num(s.spectral_abscissa)));
                cells.push(o.min_symplectic.map(num));
                cells.extend(o.values.iter().map(|v| v.map(num)));
            }
            if result.spec.delta_b_pair.is_some() {
                cells.extend(contrast_idx.iter().map(|&k| row.contrasts[k].map(num)));
            }
            for o in &row.outcomes {
                if has_tripartite(result) {
                    cells.push(o.contangle_min_raw.map(num));
                }
                cells.push(Some(status(o).to_string()));
            }
            cells
        })
        .collect()
}

pub fn sweep_csv(result: &SweepResult, provenance: &Provenance) -> String {
    let mut out = String::new();
    let spec = &result.spec;
    let mut extra = vec![format!(
        "sweep {}: {} from {:?} to {:?}, {} points",
        spec.name,
        spec.axis.name(),
        spec.start,
        spec.stop,
        spec.count
    )];
    if let Some(m) = spec.delta_b_pair {
        extra.push(format!("Barnett pair: delta_B = +-{m:?} omega_b"));
    } else {
        extra.push(format!(
            "delta_B = {:?} omega_b",
            spec.base.delta_b / spec.base.omega_b
        ));
    }
    extra.push(format!("J = {:?} g1", spec.base.j / spec.base.g1));
    extra.extend(LEGEND.iter().map(|s| s.to_string()));
    comment_block(&mut out, provenance, &extra);
    let _ = writeln!(out, "{}", sweep_columns(result).join(","));
    for cells in sweep_cells(result) {
        let line: Vec<String> = cells
            .into_iter()
            .map(|c| c.unwrap_or_else(|| NA.into()))
            .collect();
        let _ = writeln!(out, "{}", line.join(","));
    }
    out
}

/// JSON mirror of the CSV: the same columns, `null` for `NA`, plus the
/// full sweep definition and per-point error messages.
pub fn sweep_json(result: &SweepResult, provenance: &Provenance) -> String {
    let columns = sweep_columns(result);
    let rows: Vec<Value> = sweep_cells(result)
        .into_iter()
        .zip(&result.rows)
        .map(|(cells, row)| {
            let mut obj = serde_json::Map::new();
            for (name, cell) in columns.iter().zip(cells) {
                let v = match cell {
                    None => Value::Null,
                    Some(s) => s
                        .parse::<f64>()
                        .ok()
                        .and_then(|x| serde_json::Number::from_f64(x).map(Value::Number))
                        .unwrap_or(Value::String(s)),
                };
                obj.insert(name.clone(), v);
            }
            let errors: Vec<Value> = row
                .outcomes
                .iter()
                .map(|o| o.error.clone().map_or(Value::Null, Value::String))
                .collect();
            obj.insert("errors".into(), Value::Array(errors));
            Value::Object(obj)
        })
        .collect();
    let doc = json!({
        "provenance": provenance,
        "banner": provenance.banner(),
        "sweep": result.spec,
        "columns": columns,
        "rows": rows,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
    s.push('\n');
    s
}

/// A sweep repeated along a second axis, flattened into one table.
pub struct MapResult {
    pub outer_name: String,
    pub outer_values: Vec<f64>,
    pub sweeps: Vec<SweepResult>,
}

pub fn map_csv(map: &MapResult, provenance: &Provenance) -> String {
    let mut out = String::new();
    let first = &map.sweeps[0];
    let extra = vec![format!(
        "map {}: {} ({} values) x {} ({} points)",
        first.spec.name,
        map.outer_name,
        map.outer_values.len(),
        first.spec.axis.name(),
        first.spec.count
    )]
    .into_iter()
    .chain(LEGEND.iter().take(2).map(|s| s.to_string()))
    .collect::<Vec<_>>();
    comment_block(&mut out, provenance, &extra);
    let cols = sweep_columns(first);
    let _ = writeln!(out, "{},{}", map.outer_name, cols.join(","));
    for (outer, sweep) in map.outer_values.iter().zip(&map.sweeps) {
        for cells in sweep_cells(sweep) {
            let line: Vec<String> = cells
                .into_iter()
                .map(|c| c.unwrap_or_else(|| NA.into()))
                .collect();
            let _ = writeln!(out, "{},{}", num(*outer), line.join(","));
        }
    }
    out
}

pub fn map_json(map: &MapResult, provenance: &Provenance) -> String {
    let doc = json!({
        "provenance": provenance,
        "banner": provenance.banner(),
        "outer": { "name": map.outer_name, "values": map.outer_values },
        "sweeps": map.sweeps.iter().map(|s| serde_json::from_str::<Value>(&sweep_json(s, provenance)).expect("valid json")).collect::<Vec<_>>(),
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct WignerMeta<'a> {
    mode: Option<String>,
    half_range: f64,
    resolution: usize,
    integral: f64,
    max_value: f64,
    contour: &'a magnomech_core::wigner::ContourEllipse,
    contour_area: f64,
}

fn wigner_meta(grid: &WignerGrid) -> WignerMeta<'_> {
    WignerMeta {
        mode: grid.mode.map(|m| m.to_string()),
        half_range: grid.half_range,
        resolution: grid.resolution,
        integral: grid.trapezoid_integral(),
        max_value: grid.max_value(),
        contour: &grid.contour,
        contour_area: grid.contour.area(),
    }
}

/// `x,p,W` triplets, `x` varying fastest.
pub fn wigner_csv(grid: &WignerGrid, provenance: &Provenance) -> String {
    let mut out = String::new();
    let m = wigner_meta(grid);
    let extra = vec![
        format!(
            "wigner mode {}: {}x{} grid over +-{:?}",
            m.mode.as_deref().unwrap_or("?"),
            grid.resolution,
            grid.resolution,
            grid.half_range
        ),
        format!(
            "1/e contour: a = {:?}, b = {:?}, theta = {:?} rad (minor axis from the x axis); area = {:?}",
            grid.contour.a, grid.contour.b, grid.contour.theta, m.contour_area
        ),
        format!("trapezoid integral = {:?}", m.integral),
    ];
    comment_block(&mut out, provenance, &extra);
    out.push_str("x,p,W\n");
    for (row, p) in grid.axis.iter().enumerate() {
        for (col, x) in grid.axis.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", num(*x), num(*p), num(grid.value(row, col)));
        }
    }
    out
}

/// Contour parameters and grid metadata; values are included row by row
/// (`p` fixed per row).
pub fn wigner_json(grid: &WignerGrid, provenance: &Provenance) -> String {
    let rows: Vec<&[f64]> = grid.values.chunks(grid.resolution).collect();
    let doc = json!({
        "provenance": provenance,
        "banner": provenance.banner(),
        "wigner": wigner_meta(grid),
        "axis": grid.axis,
        "values": rows,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
    s.push('\n');
    s
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

struct Panel {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
}

struct Series {
    label: String,
    points: Vec<(f64, Option<f64>)>,
    color: &'static str,
    dashed: bool,
}

fn axis_ticks(lo: f64, hi: f64) -> Vec<f64> {
    (0..=4).map(|k| lo + (hi - lo) * k as f64 / 4.0).collect()
}

fn line_panel(
    out: &mut String,
    panel: &Panel,
    title: &str,
    xlabel: &str,
    series: &[Series],
    yrange: Option<(f64, f64)>,
) {
    let xs: Vec<f64> = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.0))
        .collect();
    let (xmin, xmax) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
            (a.min(x), b.max(x))
        });
    let (ymin, ymax) = yrange.unwrap_or_else(|| {
        let (lo, hi) = series
            .iter()
            .flat_map(|s| s.points.iter().filter_map(|p| p.1))
            .fold((0.0_f64, f64::NEG_INFINITY), |(a, b), y| {
                (a.min(y), b.max(y))
            });
        if hi > lo {
            (lo, hi)
        } else {
            (lo, lo + 1.0)
        }
    });
    let xspan = if xmax > xmin { xmax - xmin } else { 1.0 };
    let sx = |x: f64| panel.x0 + (x - xmin) / xspan * panel.w;
    let sy = |y: f64| panel.y0 + panel.h - (y - ymin) / (ymax - ymin) * panel.h;

    let _ = writeln!(
        out,
        r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#444"/>"##,
        panel.x0, panel.y0, panel.w, panel.h
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="14">{title}</text>"#,
        panel.x0,
        panel.y0 - 8.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{xlabel}</text>"#,
        panel.x0 + panel.w / 2.0,
        panel.y0 + panel.h + 34.0
    );
    for t in axis_ticks(xmin, xmin + xspan) {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="middle">{}</text>"#,
            sx(t),
            panel.y0 + panel.h + 16.0,
            short(t)
        );
    }
    for t in axis_ticks(ymin, ymax) {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{}</text>"#,
            panel.x0 - 6.0,
            sy(t) + 3.0,
            short(t)
        );
    }
    for (k, s) in series.iter().enumerate() {
        let mut d = String::new();
        let mut pen_down = false;
        for &(x, y) in &s.points {
            match y {
                Some(y) => {
                    let _ = write!(
                        d,
                        "{}{:.2},{:.2} ",
                        if pen_down { "L" } else { "M" },
                        sx(x),
                        sy(y)
                    );
                    pen_down = true;
                }
                None => pen_down = false,
            }
        }
        let dash = if s.dashed {
            r#" stroke-dasharray="6,4""#
        } else {
            ""
        };
        let _ = writeln!(
            out,
            r#"<path d="{}" fill="none" stroke="{}" stroke-width="1.5"{dash}/>"#,
            d.trim_end(),
            s.color
        );
        let ly = panel.y0 + 14.0 + 14.0 * k as f64;
        let lx = panel.x0 + panel.w + 12.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-width="2"{dash}/>"#,
            ly - 4.0,
            lx + 20.0,
            ly - 4.0,
            s.color
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{ly:.2}" font-size="11">{}</text>"#,
            lx + 26.0,
            s.label
        );
    }
}

fn short(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn svg_open(width: f64, height: f64) -> String {
    format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">
<rect width="100%" height="100%" fill="white"/>
"#
    )
}

/// Line chart of every measure; in paired mode a second panel shows the
/// contrast ratios on a fixed `[0, 1]` axis. Unavailable points leave gaps.
pub fn sweep_svg(result: &SweepResult) -> String {
    let paired = result.spec.delta_b_pair.is_some();
    let height = if paired { 700.0 } else { 400.0 };
    let mut out = svg_open(960.0, height);
    let xs: Vec<f64> = result.rows.iter().map(|r| r.value).collect();
    let mut series = Vec::new();
    for (k, m) in result.spec.measures.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        for (dir, label) in suffixes(result).iter().enumerate() {
            series.push(Series {
                label: format!("{}{label}", m.column()),
                points: xs.iter().copied().zip(result.series(k, dir)).collect(),
                color,
                dashed: dir == 1,
            });
        }
    }
    let top = Panel {
        x0: 70.0,
        y0: 40.0,
        w: 680.0,
        h: 260.0,
    };
    line_panel(
        &mut out,
        &top,
        &result.spec.name,
        result.spec.axis.name(),
        &series,
        None,
    );
    if paired {
        let contrasts: Vec<Series> = result
            .spec
            .measures
            .iter()
            .enumerate()
            .filter(|(_, m)| m.has_contrast())
            .map(|(k, m)| Series {
                label: format!("X_{}", m.column()),
                points: xs.iter().copied().zip(result.contrast_series(k)).collect(),
                color: PALETTE[k % PALETTE.len()],
                dashed: false,
            })
            .collect();
        let bottom = Panel {
            x0: 70.0,
            y0: 380.0,
            w: 680.0,
            h: 260.0,
        };
        line_panel(
            &mut out,
            &bottom,
            "contrast ratio",
            result.spec.axis.name(),
            &contrasts,
            Some((0.0, 1.0)),
        );
    }
    out.push_str("</svg>\n");
    out
}

fn heat_color(t: f64) -> String {
    // dark blue → teal → yellow
    let t = t.clamp(0.0, 1.0);
    let stops = [
        (0.0, [68.0, 1.0, 84.0]),
        (0.5, [33.0, 145.0, 140.0]),
        (1.0, [253.0, 231.0, 37.0]),
    ];
    let (a, b) = if t <= 0.5 {
        (stops[0], stops[1])
    } else {
        (stops[1], stops[2])
    };
    let u = (t - a.0) / (b.0 - a.0);
    let c: Vec<u8> = (0..3)
        .map(|i| (a.1[i] + u * (b.1[i] - a.1[i])).round() as u8)
        .collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// Heatmap of `values[row][col]` (row = y) over the given ranges; NA cells
/// are drawn grey.
fn heatmap(
    out: &mut String,
    panel: &Panel,
    title: &str,
    grid: &[Vec<Option<f64>>],
    ranges: ((f64, f64), (f64, f64)),
    labels: (&str, &str),
) {
    let ny = grid.len();
    let nx = grid.first().map_or(0, |r| r.len());
    let stride = nx.max(ny).div_ceil(101).max(1);
    let hi = grid
        .iter()
        .flatten()
        .flatten()
        .fold(0.0_f64, |a, &b| a.max(b));
    let hi = if hi > 0.0 { hi } else { 1.0 };
    let cw = panel.w / nx.div_ceil(stride) as f64;
    let ch = panel.h / ny.div_ceil(stride) as f64;
    for (r, row) in grid.iter().enumerate().step_by(stride) {
        for (c, v) in row.iter().enumerate().step_by(stride) {
            let fill = v.map_or_else(|| "#bbbbbb".to_string(), |v| heat_color(v / hi));
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
                panel.x0 + (c / stride) as f64 * cw,
                panel.y0 + panel.h - ((r / stride) as f64 + 1.0) * ch,
                cw + 0.05,
                ch + 0.05
            );
        }
    }
    let ((x0, x1), (y0, y1)) = ranges;
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="13">{title} (max {})</text>"#,
        panel.x0,
        panel.y0 - 8.0,
        short(hi)
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}: {} .. {}</text>"#,
        panel.x0 + panel.w / 2.0,
        panel.y0 + panel.h + 18.0,
        labels.0,
        short(x0),
        short(x1)
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="11" transform="rotate(-90 {:.2} {:.2})" text-anchor="middle">{}: {} .. {}</text>"#,
        panel.x0 - 10.0,
        panel.y0 + panel.h / 2.0,
        panel.x0 - 10.0,
        panel.y0 + panel.h / 2.0,
        labels.1,
        short(y0),
        short(y1)
    );
}

/// Heatmap of the Wigner function with its 1/e contour overlaid.
pub fn wigner_svg(grid: &WignerGrid) -> String {
    let mut out = svg_open(520.0, 540.0);
    let panel = Panel {
        x0: 50.0,
        y0: 40.0,
        w: 440.0,
        h: 440.0,
    };
    let rows: Vec<Vec<Option<f64>>> = grid
        .values
        .chunks(grid.resolution)
        .map(|r| r.iter().map(|v| Some(*v)).collect())
        .collect();
    let h = grid.half_range;
    let title = format!(
        "W, mode {}",
        grid.mode.map_or("?".into(), |m| m.to_string())
    );
    heatmap(
        &mut out,
        &panel,
        &title,
        &rows,
        ((-h, h), (-h, h)),
        ("x", "p"),
    );
    let scale = panel.w / (2.0 * h);
    let c = &grid.contour;
    // the `a` axis lies along theta; SVG y points down, so angles flip sign
    let _ = writeln!(
        out,
        r#"<ellipse cx="{:.2}" cy="{:.2}" rx="{:.3}" ry="{:.3}" transform="rotate({:.4} {:.2} {:.2})" fill="none" stroke="white" stroke-width="1.5"/>"#,
        panel.x0 + panel.w / 2.0,
        panel.y0 + panel.h / 2.0,
        c.a * scale,
        c.b * scale,
        -c.theta.to_degrees(),
        panel.x0 + panel.w / 2.0,
        panel.y0 + panel.h / 2.0
    );
    out.push_str("</svg>\n");
    out
}

/// One heatmap per measure (first drive direction) over the two map axes.
pub fn map_svg(map: &MapResult) -> String {
    let first = &map.sweeps[0];
    let n = first.spec.measures.len();
    let mut out = svg_open(40.0 + 340.0 * n as f64, 400.0);
    let inner: Vec<f64> = first.rows.iter().map(|r| r.value).collect();
    let ranges = (
        (inner[0], *inner.last().unwrap()),
        (map.outer_values[0], *map.outer_values.last().unwrap()),
    );
    for (k, m) in first.spec.measures.iter().enumerate() {
        let grid: Vec<Vec<Option<f64>>> = map.sweeps.iter().map(|s| s.series(k, 0)).collect();
        let panel = Panel {
            x0: 60.0 + 340.0 * k as f64,
            y0: 40.0,
            w: 280.0,
            h: 280.0,
        };
        heatmap(
            &mut out,
            &panel,
            &m.column(),
            &grid,
            ranges,
            (first.spec.axis.name(), &map.outer_name),
        );
    }
    out.push_str("</svg>\n");
    out
}
