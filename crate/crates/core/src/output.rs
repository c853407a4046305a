//! Trajectory CSV and SVG plot writers.
//!
//! Numbers are written with 17 significant digits in scientific notation;
//! empty cells mark quantities a model does not have (`z` for planar runs,
//! `w` without a virtual coordinate, `theta`/`beta` outside the unicycle).

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use crate::sim::{ModelKind, Trajectory};

fn num(out: &mut String, v: f64) {
    // print -0 as 0
    let v = if v == 0.0 { 0.0 } else { v };
    let _ = write!(out, "{v:.16e}");
}

fn cell(out: &mut String, v: Option<f64>) {
    out.push(',');
    if let Some(v) = v {
        num(out, v);
    }
}

pub fn csv_header(traj: &Trajectory) -> String {
    let mut cols = vec!["t", "x", "y", "z", "w", "theta"].into_iter().map(String::from).collect::<Vec<_>>();
    let k = traj.gains.len();
    let m = traj.layout.generalized_dim();
    cols.extend((1..=k).map(|i| format!("phi_{i}")));
    cols.extend(["err_norm", "V", "beta"].map(String::from));
    cols.extend((1..=m).map(|i| format!("chi_{i}")));
    if traj.model == ModelKind::Extended {
        cols.extend((1..=m).map(|i| format!("check_{i}")));
    }
    cols.join(",")
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = csv_header(traj);
    out.push('\n');
    let layout = traj.layout;
    for r in &traj.records {
        num(&mut out, r.t);
        cell(&mut out, Some(r.xi[0]));
        cell(&mut out, Some(r.xi[1]));
        cell(&mut out, (layout.physical == 3).then(|| r.xi[2]));
        cell(&mut out, traj.w(r));
        cell(&mut out, r.theta);
        for e in r.e.iter() {
            cell(&mut out, Some(*e));
        }
        cell(&mut out, Some(r.err_norm));
        cell(&mut out, Some(r.lyapunov));
        cell(&mut out, r.beta);
        for c in r.chi.iter() {
            cell(&mut out, Some(*c));
        }
        if let Some(check) = &r.transformed {
            for c in check.iter() {
                cell(&mut out, Some(*c));
            }
        }
        out.push('\n');
    }
    out
}

pub fn write_trajectory(traj: &Trajectory, path: &Path) -> io::Result<()> {
    fs::write(path, trajectory_csv(traj))
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub color: &'static str,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>, color: &'static str) -> Self {
        Self {
            label: label.into(),
            points,
            color,
        }
    }
}

pub const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// A 2D line chart rendered as standalone SVG.
#[derive(Debug, Clone)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub log_y: bool,
    /// Keep one unit on x equal to one unit on y.
    pub equal_aspect: bool,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 72.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 56.0;
const MAX_POINTS: usize = 4000;

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e5).contains(&a) {
        let s = format!("{v:.3}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    } else {
        format!("{v:.1e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

impl LinePlot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            series: Vec::new(),
            log_y: false,
            equal_aspect: false,
        }
    }

    pub fn series(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }

    pub fn log_y(mut self) -> Self {
        self.log_y = true;
        self
    }

    pub fn equal_aspect(mut self) -> Self {
        self.equal_aspect = true;
        self
    }

    fn transform_y(&self, y: f64) -> Option<f64> {
        if self.log_y {
            (y > 0.0 && y.is_finite()).then(|| y.log10())
        } else {
            y.is_finite().then_some(y)
        }
    }

    pub fn render(&self) -> String {
        let pts: Vec<Vec<(f64, f64)>> = self
            .series
            .iter()
            .map(|s| {
                let stride = s.points.len().div_ceil(MAX_POINTS).max(1);
                let last = s.points.len().saturating_sub(1);
                s.points
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| i % stride == 0 || *i == last)
                    .filter_map(|(_, (x, y))| {
                        let y = self.transform_y(*y)?;
                        x.is_finite().then_some((*x, y))
                    })
                    .collect()
            })
            .collect();
        let all = pts.iter().flatten();
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for (x, y) in all {
            x0 = x0.min(*x);
            x1 = x1.max(*x);
            y0 = y0.min(*y);
            y1 = y1.max(*y);
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 - x0 <= 0.0 {
            x0 -= 0.5;
            x1 += 0.5;
        }
        if y1 - y0 <= 0.0 {
            y0 -= 0.5;
            y1 += 0.5;
        }
        let pad_y = 0.05 * (y1 - y0);
        y0 -= pad_y;
        y1 += pad_y;
        let pw = WIDTH - MARGIN_L - MARGIN_R;
        let ph = HEIGHT - MARGIN_T - MARGIN_B;
        if self.equal_aspect {
            let sx = (x1 - x0) / pw;
            let sy = (y1 - y0) / ph;
            if sx > sy {
                let c = 0.5 * (y0 + y1);
                y0 = c - 0.5 * sx * ph;
                y1 = c + 0.5 * sx * ph;
            } else {
                let c = 0.5 * (x0 + x1);
                x0 = c - 0.5 * sy * pw;
                x1 = c + 0.5 * sy * pw;
            }
        }
        let px = |x: f64| MARGIN_L + (x - x0) / (x1 - x0) * pw;
        let py = |y: f64| MARGIN_T + (y1 - y) / (y1 - y0) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r##"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>"##
        );
        for t in ticks(x0, x1) {
            let x = px(t);
            let _ = writeln!(
                s,
                r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#ddd"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
                MARGIN_T,
                MARGIN_T + ph,
                MARGIN_T + ph + 16.0,
                fmt_tick(t)
            );
        }
        for t in ticks(y0, y1) {
            let y = py(t);
            let label = if self.log_y { format!("1e{}", fmt_tick(t)) } else { fmt_tick(t) };
            let _ = writeln!(
                s,
                r##"<line x1="{MARGIN_L}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
                MARGIN_L + pw,
                MARGIN_L - 6.0,
                y + 4.0,
                label
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            MARGIN_L + pw / 2.0,
            HEIGHT - 16.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
            MARGIN_T + ph / 2.0,
            MARGIN_T + ph / 2.0,
            escape(&self.y_label)
        );
        for (i, (series, p)) in self.series.iter().zip(&pts).enumerate() {
            if p.is_empty() {
                continue;
            }
            let mut d = String::new();
            for (j, (x, y)) in p.iter().enumerate() {
                let _ = write!(d, "{}{:.2},{:.2}", if j == 0 { "M" } else { " L" }, px(*x), py(*y));
            }
            let _ = writeln!(
                s,
                r#"<path d="{d}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
                series.color
            );
            if series.label.is_empty() {
                continue;
            }
            let ly = MARGIN_T + 14.0 + 16.0 * i as f64;
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
                MARGIN_L + 10.0,
                MARGIN_L + 30.0,
                series.color,
                MARGIN_L + 36.0,
                ly + 4.0,
                escape(&series.label)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

/// Isometric view of a 3D point set onto the page plane.
pub fn isometric(points: &[[f64; 3]]) -> Vec<(f64, f64)> {
    let c = (std::f64::consts::PI / 6.0).cos();
    points
        .iter()
        .map(|[x, y, z]| ((x - y) * c, 0.5 * (x + y) + z))
        .collect()
}

/// The standard plot set for a run: `(file name, svg)` pairs.
pub fn trajectory_plots(traj: &Trajectory, path_trace: Option<&[Vec<f64>]>) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let times = traj.times();
    let xy: Vec<(f64, f64)> = traj.records.iter().map(|r| (r.xi[0], r.xi[1])).collect();
    let mut plot = LinePlot::new("Trajectory (top view)", "x [m]", "y [m]").equal_aspect();
    if let Some(trace) = path_trace {
        plot = plot.series(Series::new("desired path", trace.iter().map(|p| (p[0], p[1])).collect(), PALETTE[1]));
    }
    plot = plot.series(Series::new("vehicle", xy, PALETTE[0]));
    out.push(("xy.svg".to_string(), plot.render()));

    if traj.layout.physical == 3 {
        let pts: Vec<[f64; 3]> = traj.records.iter().map(|r| [r.xi[0], r.xi[1], r.xi[2]]).collect();
        let mut plot = LinePlot::new("Trajectory (isometric projection)", "(x - y) cos 30° [m]", "(x + y)/2 + z [m]")
            .equal_aspect();
        if let Some(trace) = path_trace {
            let p: Vec<[f64; 3]> = trace.iter().map(|p| [p[0], p[1], p[2]]).collect();
            plot = plot.series(Series::new("desired path", isometric(&p), PALETTE[1]));
        }
        plot = plot.series(Series::new("vehicle", isometric(&pts), PALETTE[0]));
        out.push(("projection3d.svg".to_string(), plot.render()));
    }

    let err: Vec<(f64, f64)> = traj.records.iter().map(|r| (r.t, r.err_norm)).collect();
    let plot = LinePlot::new("Path-following error", "t [s]", "|e|")
        .log_y()
        .series(Series::new("|e|", err, PALETTE[0]));
    out.push(("error.svg".to_string(), plot.render()));

    let k = traj.gains.len();
    let mut plot = LinePlot::new("Surface values", "t [s]", "phi_i");
    for i in 0..k {
        let s: Vec<(f64, f64)> = traj.records.iter().map(|r| (r.t, r.e[i])).collect();
        plot = plot.series(Series::new(format!("phi_{}", i + 1), s, PALETTE[i % PALETTE.len()]));
    }
    out.push(("phi.svg".to_string(), plot.render()));

    if traj.layout.virtual_coordinate {
        let w: Vec<(f64, f64)> = traj.records.iter().map(|r| (r.t, traj.w(r).unwrap_or(f64::NAN))).collect();
        let plot = LinePlot::new("Virtual coordinate", "t [s]", "w").series(Series::new("w", w, PALETTE[2]));
        out.push(("w.svg".to_string(), plot.render()));
    }
    if traj.model == ModelKind::Unicycle {
        let b: Vec<(f64, f64)> = times
            .iter()
            .zip(&traj.records)
            .map(|(t, r)| (*t, r.beta.unwrap_or(f64::NAN)))
            .collect();
        let plot = LinePlot::new("Heading error", "t [s]", "beta [rad]").series(Series::new("beta", b, PALETTE[3]));
        out.push(("beta.svg".to_string(), plot.render()));
    }
    out
}
