//! Static SVG line charts: log2 iteration axis, min-max normalized series.

use std::fmt::Write;

use thiserror::Error;

use crate::table::{normalize, Table, TableError};

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("table has no rows")]
    EmptyTable,
    #[error("table has a single row; nothing to draw a line through")]
    SingletonTable,
    #[error("no series selected")]
    NoSeries,
    #[error(transparent)]
    Table(#[from] TableError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub x: String,
    pub series: Vec<String>,
    pub title: String,
    pub width: u32,
    pub height: u32,
}

impl PlotSpec {
    pub fn new(x: &str, series: &[&str]) -> Self {
        Self {
            x: x.into(),
            series: series.iter().map(|s| s.to_string()).collect(),
            title: String::new(),
            width: 720,
            height: 420,
        }
    }

    pub fn title(mut self, t: &str) -> Self {
        self.title = t.into();
        self
    }
}

const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];
const MAX_POINTS: usize = 1500;
const ML: f64 = 56.0;
const MR: f64 = 170.0;
const MT: f64 = 34.0;
const MB: f64 = 46.0;

/// `t = 0` sits one unit left of `t = 1` on the log axis.
fn log_x(t: f64) -> f64 {
    if t <= 0.0 {
        -1.0
    } else {
        t.log2()
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

pub fn render_svg(table: &Table, spec: &PlotSpec) -> Result<String, PlotError> {
    match table.len() {
        0 => return Err(PlotError::EmptyTable),
        1 => return Err(PlotError::SingletonTable),
        _ => {}
    }
    if spec.series.is_empty() {
        return Err(PlotError::NoSeries);
    }
    let xs: Vec<f64> = table.column(&spec.x)?.into_iter().map(log_x).collect();
    let (x0, x1) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let span = if x1 > x0 { x1 - x0 } else { 1.0 };
    let (w, h) = (spec.width as f64, spec.height as f64);
    let pw = w - ML - MR;
    let ph = h - MT - MB;
    let px = |x: f64| ML + (x - x0) / span * pw;
    let py = |y: f64| MT + (1.0 - y) * ph;

    // thin long tables to one point per horizontal bucket
    let keep: Vec<usize> = if xs.len() <= MAX_POINTS {
        (0..xs.len()).collect()
    } else {
        let mut out = Vec::new();
        let mut last = None;
        for (i, &x) in xs.iter().enumerate() {
            let b = ((x - x0) / span * MAX_POINTS as f64) as usize;
            if last != Some(b) || i + 1 == xs.len() {
                out.push(i);
                last = Some(b);
            }
        }
        out
    };

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
    if !spec.title.is_empty() {
        writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, ML + pw / 2.0, esc(&spec.title)).unwrap();
    }
    writeln!(s, r##"<rect x="{ML}" y="{MT}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>"##).unwrap();

    // x ticks at integer exponents
    let step = ((span / 10.0).ceil() as i64).max(1);
    let mut e = x0.ceil() as i64;
    while (e as f64) <= x1 {
        let x = px(e as f64);
        let label = if e < 0 { "0".to_string() } else { format!("2^{e}") };
        writeln!(s, r##"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="#444"/>"##, MT + ph, MT + ph + 4.0).unwrap();
        writeln!(s, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{label}</text>"#, MT + ph + 17.0).unwrap();
        e += step;
    }
    for i in 0..=4 {
        let v = i as f64 / 4.0;
        let y = py(v);
        writeln!(s, r##"<line x1="{}" y1="{y:.2}" x2="{ML}" y2="{y:.2}" stroke="#444"/>"##, ML - 4.0).unwrap();
        writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{v}</text>"#, ML - 7.0, y + 4.0).unwrap();
    }
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{} (log2)</text>"#, ML + pw / 2.0, h - 8.0, esc(&spec.x)).unwrap();
    writeln!(s, r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">normalized value</text>"#, MT + ph / 2.0, MT + ph / 2.0).unwrap();

    for (ci, name) in spec.series.iter().enumerate() {
        let raw = table.column(name)?;
        let flat = {
            let lo = raw.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            !(hi > lo)
        };
        let ys = normalize(&raw);
        let color = COLORS[ci % COLORS.len()];
        let mut d = String::new();
        for (j, &i) in keep.iter().enumerate() {
            let cmd = if j == 0 { 'M' } else { 'L' };
            write!(d, "{cmd}{:.2} {:.2}", px(xs[i]), py(ys[i])).unwrap();
        }
        writeln!(s, r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.6"/>"#).unwrap();
        let ly = MT + 10.0 + 18.0 * ci as f64;
        let lx = ML + pw + 12.0;
        writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="3"/>"#, lx + 18.0).unwrap();
        let note = if flat { " (constant)" } else { "" };
        writeln!(s, r#"<text x="{}" y="{}">{}{note}</text>"#, lx + 24.0, ly + 4.0, esc(name)).unwrap();
        if flat {
            writeln!(
                s,
                r#"<text x="{}" y="{:.2}" fill="{color}" font-style="italic">warning: {} is constant, drawn at 0.5</text>"#,
                ML + 6.0,
                py(0.5) - 6.0,
                esc(name)
            )
            .unwrap();
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}
