//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export returns a string. Failures come back as `error: ...` so the
//! page can show them without a JS exception path.

use std::fmt::Write;

use wasm_bindgen::prelude::*;

use phaselab::dynamics::{first_crossing, simulate_until};
use phaselab::model::{class_probs, ModelParams};
use phaselab::plot::{render_svg, PlotSpec};
use phaselab::recon::{error_breakdown, fit_gj_or_t0, fit_optimal, ReconFit};
use phaselab::table::{Cell, Table};
use phaselab::theory::{detect_phases, loss_curve, on_path_state, t_star};

const MAX_STEPS: usize = 2_000_000;
const CURVE_ROWS: usize = 1500;

fn or_error(r: Result<String, String>) -> String {
    r.unwrap_or_else(|e| format!("error: {e}"))
}

fn params(l: u32, d: u32, k: f64, lambda: f64) -> Result<ModelParams, String> {
    let l = l as usize;
    ModelParams::new(2 * l, d as usize, l, k, lambda).map_err(|e| e.to_string())
}

/// Loss and self-probability curve of the reduced dynamics, run until the
/// weak self-probability reaches 0.99 or the step cap.
pub fn phase_curve(l: u32, d: u32, k: f64, lambda: f64) -> Result<String, String> {
    let p = params(l, d, k, lambda)?;
    if lambda <= 0.0 {
        return Err("learning rate must be positive".into());
    }
    let tr = simulate_until(&p, MAX_STEPS, |_, q| q.q_self_weak >= 0.99);
    let rep = detect_phases(&tr, &p).map_err(|e| e.to_string())?;
    let r = loss_curve(&tr);
    let mut table = Table::new(["t", "R", "q_self_weak", "q_self_strong"]);
    // log-spaced rows keep the page light for long runs
    let mut next = 0usize;
    for (i, (s, q)) in tr.states.iter().zip(&tr.probs).enumerate() {
        if i >= next || i + 1 == tr.len() {
            table
                .push(vec![Cell::from(s.t), r[i].into(), q.q_self_weak.into(), q.q_self_strong.into()])
                .map_err(|e| e.to_string())?;
            next = (i + 1).max((i as f64 * (1.0 + 8.0 / CURVE_ROWS as f64)) as usize);
        }
    }
    let title = format!(
        "{:?}: R min {:.3e} at t={}, final {:.3e} at t={}",
        rep.verdict, rep.r_min, rep.t_min_error, rep.r_final, rep.t_final
    );
    render_svg(&table, &PlotSpec::new("t", &["R", "q_self_weak", "q_self_strong"]).title(&title)).map_err(|e| e.to_string())
}

fn line(svg: &mut String, fit: &ReconFit, sx: impl Fn(f64) -> f64, sy: impl Fn(f64) -> f64, color: &str) {
    let (a, b) = (fit.eval(0.0), fit.eval(1.0));
    let _ = writeln!(
        svg,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="2"/>"#,
        sx(0.0),
        sy(a),
        sx(1.0),
        sy(b)
    );
}

/// The four archetype points (softmax output, target) at self-probability
/// position `f`, with the two-point and least-squares reconstruction lines.
pub fn fit_snapshot(l: u32, k: f64, f: f64) -> Result<String, String> {
    let p = params(l, l.max(1), k, 1.0)?;
    if !(f >= 1.0 / l as f64) || !f.is_finite() {
        return Err(format!("f must be at least 1/l = {:.4}", 1.0 / l as f64));
    }
    let q = class_probs(&on_path_state(f, p.l), &p);
    let gj = fit_gj_or_t0(&q, &p);
    let opt = fit_optimal(&q, &p);
    let (eg, eo) = (error_breakdown(&gj, &q, &p), error_breakdown(&opt, &q, &p));

    let (w, h, m) = (560.0, 360.0, 48.0);
    let ymax = k.max(gj.eval(1.0)).max(opt.eval(1.0)) * 1.1;
    let ymin = gj.eval(0.0).min(opt.eval(0.0)).min(0.0) - 0.1 * ymax;
    let sx = |x: f64| m + x * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y - ymin) / (ymax - ymin) * (h - 2.0 * m);
    let mut svg = format!(
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">
<rect width="100%" height="100%" fill="white"/>
<line x1="{m}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#444"/>
<line x1="{m}" y1="{m}" x2="{m}" y2="{:.2}" stroke="#444"/>
<text x="{:.2}" y="{:.2}" text-anchor="middle">softmax output q</text>
"##,
        sy(0.0),
        w - m,
        sy(0.0),
        h - m,
        w / 2.0,
        h - 12.0
    );
    line(&mut svg, &gj, sx, sy, "#d62728");
    line(&mut svg, &opt, sx, sy, "#1f77b4");
    let pts = [
        (q.q_self_weak, 1.0, "weak self"),
        (q.q_self_strong, k, "strong self"),
        (q.q_cross_weak, 0.0, "weak other"),
        (q.q_cross_strong, 0.0, "strong other"),
    ];
    for (i, (x, y, name)) in pts.iter().enumerate() {
        let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="5" fill="black"/>"#, sx(*x), sy(*y));
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}">{name}</text>"#, sx(*x) + 7.0, sy(*y) - 7.0 - 12.0 * (i % 2) as f64);
    }
    let _ = writeln!(
        svg,
        r##"<text x="{m}" y="20" fill="#d62728">two-point: R = {:.4e} (closed-form weights)</text>
<text x="{:.2}" y="20" fill="#1f77b4">least squares: R = {:.4e} (sample weights)</text>
</svg>"##,
        eg.total_paper,
        w / 2.0,
        eo.total_exact
    );
    Ok(svg)
}

/// Predicted iteration scale `t*` for reaching `f_target = c/l` against the
/// simulated crossing.
pub fn crossing_info(l: u32, d: u32, k: f64, lambda: f64, c: f64) -> Result<String, String> {
    let p = params(l, d, k, lambda)?;
    if !(c > 1.0) || lambda <= 0.0 {
        return Err("need c > 1 and a positive learning rate".into());
    }
    let target = c / p.l as f64;
    let ts = t_star(&p, target);
    let cap = ((ts * 50.0) as usize).clamp(1000, MAX_STEPS);
    let tr = simulate_until(&p, cap, |s, _| s.f >= target);
    Ok(match first_crossing(&tr, target) {
        Some(t) => format!("t* = {ts:.1}; f reaches {target:.5} at t = {t} (t/t* = {:.3})", t as f64 / ts),
        None => format!("t* = {ts:.1}; f did not reach {target:.5} within {cap} steps"),
    })
}

#[wasm_bindgen]
pub fn phase_curve_svg(l: u32, d: u32, k: f64, lambda: f64) -> String {
    or_error(phase_curve(l, d, k, lambda))
}

#[wasm_bindgen]
pub fn fit_snapshot_svg(l: u32, k: f64, f: f64) -> String {
    or_error(fit_snapshot(l, k, f))
}

#[wasm_bindgen]
pub fn crossing_summary(l: u32, d: u32, k: f64, lambda: f64, c: f64) -> String {
    or_error(crossing_info(l, d, k, lambda, c))
}
