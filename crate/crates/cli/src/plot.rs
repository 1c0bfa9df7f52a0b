//! Static SVG figures rendered from the CSV artifacts of a run.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use stl_shield::experiment::io::{read_curve, Table};
use stl_shield::experiment::ExperimentConfig;
use stl_shield::{Shape, Vec2};

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 56.0;
const COLORS: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

struct Series {
    label: String,
    /// Broken into segments wherever a value is missing.
    segments: Vec<Vec<(f64, f64)>>,
}

impl Series {
    fn new(label: &str, xs: &[f64], ys: &[Option<f64>]) -> Self {
        let mut segments = vec![];
        let mut cur = vec![];
        for (&x, y) in xs.iter().zip(ys) {
            match y {
                Some(y) if y.is_finite() => cur.push((x, *y)),
                _ if !cur.is_empty() => segments.push(std::mem::take(&mut cur)),
                _ => {}
            }
        }
        if !cur.is_empty() {
            segments.push(cur);
        }
        Series {
            label: label.into(),
            segments,
        }
    }
}

fn bounds(series: &[Series]) -> (f64, f64, f64, f64) {
    let pts = series.iter().flat_map(|s| s.segments.iter().flatten());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        return (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-12 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    (x0, x1, y0, y1)
}

fn header(out: &mut String, w: f64, h: f64) {
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
}

/// Line chart of `series` inside the box `(ox, oy, w, h)`.
fn chart(out: &mut String, (ox, oy, w, h): (f64, f64, f64, f64), title: &str, xlabel: &str, series: &[Series]) {
    let (x0, x1, y0, y1) = bounds(series);
    let px = |x: f64| ox + PAD + (x - x0) / (x1 - x0) * (w - 1.5 * PAD);
    let py = |y: f64| oy + h - PAD + (y0 - y) / (y1 - y0) * (h - 1.5 * PAD);
    writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="14">{title}</text>"#,
        ox + w / 2.0,
        oy + 20.0
    )
    .unwrap();
    writeln!(
        out,
        r#"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
        px(x0),
        py(y1),
        px(x1) - px(x0),
        py(y0) - py(y1)
    )
    .unwrap();
    for (v, anchor) in [(y0, py(y0)), (y1, py(y1))] {
        writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.3}</text>"#, px(x0) - 4.0, anchor + 4.0).unwrap();
    }
    if y0 < 0.0 && y1 > 0.0 {
        writeln!(
            out,
            r##"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#999" stroke-dasharray="4 3"/>"##,
            px(x0),
            py(0.0),
            px(x1),
            py(0.0)
        )
        .unwrap();
    }
    for (v, anchor) in [(x0, "start"), (x1, "end")] {
        writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="{anchor}">{v:.1}</text>"#, px(v), py(y0) + 16.0).unwrap();
    }
    writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{xlabel}</text>"#,
        (px(x0) + px(x1)) / 2.0,
        py(y0) + 30.0
    )
    .unwrap();
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        for seg in &s.segments {
            let pts: Vec<String> = seg.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
            writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" ")).unwrap();
        }
        writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" fill="{color}">{}</text>"#,
            px(x0) + 8.0,
            py(y1) + 16.0 + 14.0 * i as f64,
            s.label
        )
        .unwrap();
    }
}

pub fn learning_curve(table: &[stl_shield::learner::CurvePoint]) -> String {
    let xs: Vec<f64> = table.iter().map(|p| p.episode as f64).collect();
    let ys: Vec<Option<f64>> = table.iter().map(|p| Some(p.ret)).collect();
    let mut out = String::new();
    header(&mut out, W, H);
    chart(&mut out, (0.0, 0.0, W, H), "Learning curve", "episode", &[Series::new("return", &xs, &ys)]);
    out.push_str("</svg>\n");
    out
}

/// `b(t)` above, `eps(t)` below.
pub fn barrier_trace(log: &Table) -> Result<String> {
    let t = log.column("t")?;
    let b = log.optional("b_value")?;
    let eps = log.optional("eps")?;
    let mut out = String::new();
    header(&mut out, W, 2.0 * H);
    chart(&mut out, (0.0, 0.0, W, H), "Time-critical barrier value", "t", &[Series::new("b", &t, &b)]);
    chart(&mut out, (0.0, H, W, H), "QP slack", "t", &[Series::new("eps", &t, &eps)]);
    out.push_str("</svg>\n");
    Ok(out)
}

fn shape_svg(out: &mut String, shape: &Shape, c: Vec2, map: &dyn Fn(Vec2) -> (f64, f64), scale: f64, style: &str) {
    let (x, y) = map(c);
    match *shape {
        Shape::Disk { radius } => {
            writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="{:.2}" {style}/>"#, radius * scale).unwrap();
        }
        Shape::Rect {
            half_width,
            half_height,
        } => {
            writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" {style}/>"#,
                x - half_width * scale,
                y - half_height * scale,
                2.0 * half_width * scale,
                2.0 * half_height * scale
            )
            .unwrap();
        }
    }
}

/// Agent path, goal, region tracks and their first and last positions.
pub fn trajectory_snapshot(log: &Table, cfg: &ExperimentConfig) -> Result<String> {
    let world = &cfg.world;
    let (lo, hi) = (world.arena.min, world.arena.max);
    let side = W - 2.0 * 20.0;
    let scale = side / (hi.x - lo.x).max(hi.y - lo.y);
    let map = |p: Vec2| (20.0 + (p.x - lo.x) * scale, 20.0 + side - (p.y - lo.y) * scale);
    let mut out = String::new();
    header(&mut out, W, W);
    let (ax, ay) = map(Vec2::new(lo.x, hi.y));
    writeln!(
        out,
        r#"<rect x="{ax:.2}" y="{ay:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        (hi.x - lo.x) * scale,
        (hi.y - lo.y) * scale
    )
    .unwrap();
    shape_svg(&mut out, &world.goal.shape, world.goal.center, &map, scale, r##"fill="#2ca02c" fill-opacity="0.25" stroke="#2ca02c""##);
    for (i, r) in world.regions.iter().enumerate() {
        let color = COLORS[(i + 1) % COLORS.len()];
        let centers = log.points(&format!("region_{}_cx", r.name), &format!("region_{}_cy", r.name))?;
        let pts: Vec<String> = centers
            .iter()
            .map(|&c| {
                let (x, y) = map(c);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-dasharray="3 3" points="{}"/>"#, pts.join(" ")).unwrap();
        if let (Some(&first), Some(&last)) = (centers.first(), centers.last()) {
            shape_svg(&mut out, &r.shape, first, &map, scale, &format!(r#"fill="none" stroke="{color}" stroke-opacity="0.5""#));
            shape_svg(&mut out, &r.shape, last, &map, scale, &format!(r#"fill="{color}" fill-opacity="0.3" stroke="{color}""#));
            let (x, y) = map(last);
            writeln!(out, r#"<text x="{x:.2}" y="{y:.2}" text-anchor="middle">{}</text>"#, r.name).unwrap();
        }
    }
    let path = log.points("x1", "x2")?;
    let pts: Vec<String> = path
        .iter()
        .map(|&p| {
            let (x, y) = map(p);
            format!("{x:.2},{y:.2}")
        })
        .collect();
    writeln!(out, r#"<polyline fill="none" stroke="black" stroke-width="1.2" points="{}"/>"#, pts.join(" ")).unwrap();
    if let Some(&p) = path.first() {
        let (x, y) = map(p);
        writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="4" fill="black"/>"#).unwrap();
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Renders every figure derivable from the artifacts in `dir`.
pub fn render_dir(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = vec![];
    let mut emit = |name: String, svg: String| -> Result<()> {
        let p = dir.join(name);
        fs::write(&p, svg).with_context(|| format!("writing {}", p.display()))?;
        written.push(p);
        Ok(())
    };
    let curve = dir.join("curve.csv");
    if curve.exists() {
        emit("learning_curve.svg".into(), learning_curve(&read_curve(File::open(&curve)?)?))?;
    }
    let cfg: Option<ExperimentConfig> = match File::open(dir.join("config.json")) {
        Ok(f) => Some(serde_json::from_reader(BufReader::new(f)).context("parsing config.json")?),
        Err(_) => None,
    };
    let mut logs: Vec<(usize, PathBuf)> = fs::read_dir(dir)?
        .filter_map(|e| {
            let p = e.ok()?.path();
            let k = p.file_name()?.to_str()?.strip_prefix("episode_")?.strip_suffix(".csv")?.parse().ok()?;
            Some((k, p))
        })
        .collect();
    logs.sort();
    for (k, p) in logs {
        let table = Table::read(BufReader::new(File::open(&p)?)).with_context(|| format!("reading {}", p.display()))?;
        emit(format!("barrier_{k}.svg"), barrier_trace(&table)?)?;
        if let Some(cfg) = &cfg {
            emit(format!("trajectory_{k}.svg"), trajectory_snapshot(&table, cfg)?)?;
        }
    }
    Ok(written)
}
