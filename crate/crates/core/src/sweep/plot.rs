//! Minimal log-log SVG charts of sweep results.
//!
//! The plot-area group carries its axis mapping as `data-*` attributes
//! (decade bounds and pixel rectangle) so downstream tools can map points
//! back to data coordinates.

use std::fmt::Write as _;
use std::io::Write;

use super::{rs_crossover, Result, SweepError, SweepRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// Relative sensitivity against gain, with the break-even line.
    RsVsGain,
    /// Interferometer sensitivity against gain, one curve per α.
    DeltaxVsGain,
}

const WIDTH: f64 = 820.0;
const HEIGHT: f64 = 560.0;
const LEFT: f64 = 100.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 70.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

struct Series {
    label: String,
    alpha: Option<f64>,
    points: Vec<(f64, f64)>,
}

/// Decade-aligned log axis.
struct Axis {
    lo: f64,
    hi: f64,
}

impl Axis {
    fn spanning(values: impl Iterator<Item = f64>, include: Option<f64>) -> Axis {
        let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            let l = v.log10();
            (lo.min(l), hi.max(l))
        });
        if let Some(v) = include {
            lo = lo.min(v.log10());
            hi = hi.max(v.log10());
        }
        let (mut lo, mut hi) = (lo.floor(), hi.ceil());
        if hi - lo < 1.0 {
            lo -= 0.5;
            hi += 0.5;
        }
        Axis { lo, hi }
    }

    fn frac(&self, v: f64) -> f64 {
        (v.log10() - self.lo) / (self.hi - self.lo)
    }

    fn decades(&self) -> impl Iterator<Item = i32> + '_ {
        (self.lo.ceil() as i32)..=(self.hi.floor() as i32)
    }
}

fn collect_series(rows: &[SweepRow], kind: PlotKind) -> Vec<Series> {
    match kind {
        PlotKind::RsVsGain => {
            // r_s does not depend on α; take the first α's curve.
            let alpha = rows[0].alpha;
            let mut points: Vec<(f64, f64)> = rows.iter().filter(|r| r.alpha == alpha).map(|r| (r.gain, r.r_s)).collect();
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            vec![Series { label: "R_S".into(), alpha: None, points }]
        }
        PlotKind::DeltaxVsGain => {
            let mut alphas: Vec<f64> = rows.iter().map(|r| r.alpha).collect();
            alphas.sort_by(f64::total_cmp);
            alphas.dedup();
            alphas
                .into_iter()
                .map(|alpha| {
                    let mut points: Vec<(f64, f64)> =
                        rows.iter().filter(|r| r.alpha == alpha).map(|r| (r.gain, r.delta_x_nd)).collect();
                    points.sort_by(|a, b| a.0.total_cmp(&b.0));
                    Series { label: format!("α = {alpha:.0e}"), alpha: Some(alpha), points }
                })
                .collect()
        }
    }
}

fn decade_label(exp: i32) -> String {
    format!("10<tspan dy=\"-7\" font-size=\"10\">{exp}</tspan>")
}

/// Render a self-contained SVG 1.1 document; returns bytes written.
pub fn emit_plot<W: Write>(rows: &[SweepRow], kind: PlotKind, mut out: W) -> Result<usize> {
    let rows: Vec<SweepRow> = rows
        .iter()
        .copied()
        .filter(|r| {
            let y = match kind {
                PlotKind::RsVsGain => r.r_s,
                PlotKind::DeltaxVsGain => r.delta_x_nd,
            };
            r.gain > 0.0 && r.gain.is_finite() && y > 0.0 && y.is_finite()
        })
        .collect();
    if rows.is_empty() {
        return Err(SweepError::Invalid("nothing to plot: no rows with positive values".into()));
    }
    let series = collect_series(&rows, kind);
    let reference = (kind == PlotKind::RsVsGain).then_some(1.0);
    let x_axis = Axis::spanning(rows.iter().map(|r| r.gain), None);
    let y_axis = Axis::spanning(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)), reference);

    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |g: f64| LEFT + x_axis.frac(g) * pw;
    let py = |v: f64| TOP + (1.0 - y_axis.frac(v)) * ph;

    let (title, y_label) = match kind {
        PlotKind::RsVsGain => ("Relative sensitivity vs parametric gain", "R_S = δX_direct / δX_nd (dimensionless)"),
        PlotKind::DeltaxVsGain => ("Methane sensitivity vs parametric gain", "δX_CH4 (ppm·m)"),
    };

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="13">"#
    );
    let _ = writeln!(s, r#"  <rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"  <text x="{}" y="28" text-anchor="middle" font-size="16">{title}</text>"#, LEFT + pw / 2.0);
    let _ = writeln!(
        s,
        r#"  <g id="plot-area" data-x-log-min="{}" data-x-log-max="{}" data-y-log-min="{}" data-y-log-max="{}" data-left="{LEFT}" data-top="{TOP}" data-width="{pw}" data-height="{ph}">"#,
        x_axis.lo, x_axis.hi, y_axis.lo, y_axis.hi
    );
    let _ = writeln!(s, r#"    <rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);

    for e in x_axis.decades() {
        let x = px(10f64.powi(e));
        let _ = writeln!(s, r##"    <line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#dddddd"/>"##, TOP + ph);
        let _ = writeln!(s, r#"    <text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, TOP + ph + 20.0, decade_label(e));
    }
    for e in y_axis.decades() {
        let y = py(10f64.powi(e));
        let _ = writeln!(s, r##"    <line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##, LEFT + pw);
        let _ = writeln!(s, r#"    <text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 8.0, y + 4.0, decade_label(e));
    }

    if let Some(level) = reference {
        let y = py(level);
        let _ = writeln!(
            s,
            r##"    <line id="rs-unity" x1="{LEFT}" y1="{y:.4}" x2="{:.4}" y2="{y:.4}" stroke="#555555" stroke-dasharray="6,4"/>"##,
            LEFT + pw
        );
    }

    for (i, ser) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let alpha_attr = ser.alpha.map(|a| format!(r#" data-alpha="{a:e}""#)).unwrap_or_default();
        if ser.points.len() == 1 {
            let (g, v) = ser.points[0];
            let _ = writeln!(
                s,
                r#"    <circle class="marker"{alpha_attr} cx="{:.4}" cy="{:.4}" r="4" fill="{color}"/>"#,
                px(g),
                py(v)
            );
        } else {
            let pts: Vec<String> = ser.points.iter().map(|&(g, v)| format!("{:.4},{:.4}", px(g), py(v))).collect();
            let _ = writeln!(
                s,
                r#"    <polyline class="series"{alpha_attr} fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
                pts.join(" ")
            );
        }
    }

    if kind == PlotKind::RsVsGain {
        if let Some(g) = rs_crossover(&rows) {
            let _ = writeln!(
                s,
                r#"    <circle class="crossover" data-gain="{g:e}" cx="{:.4}" cy="{:.4}" r="5" fill="none" stroke="black"/>"#,
                px(g),
                py(1.0)
            );
            let _ = writeln!(s, r#"    <text x="{:.2}" y="{:.2}">G = {g:.3e}</text>"#, px(g) + 8.0, py(1.0) - 8.0);
        }
    }
    let _ = writeln!(s, "  </g>");

    if kind == PlotKind::DeltaxVsGain {
        for (i, ser) in series.iter().enumerate() {
            let y = TOP + 20.0 + 22.0 * i as f64;
            let x = LEFT + pw + 15.0;
            let color = COLORS[i % COLORS.len()];
            let _ = writeln!(s, r#"  <line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"/>"#, x + 25.0);
            let _ = writeln!(s, r#"  <text x="{}" y="{}">{}</text>"#, x + 32.0, y + 4.0, ser.label);
        }
    }

    let _ = writeln!(s, r#"  <text x="{}" y="{}" text-anchor="middle">Parametric gain G (dimensionless)</text>"#, LEFT + pw / 2.0, HEIGHT - 20.0);
    let _ = writeln!(
        s,
        r#"  <text x="25" y="{0}" text-anchor="middle" transform="rotate(-90 25 {0})">{y_label}</text>"#,
        TOP + ph / 2.0
    );
    s.push_str("</svg>\n");

    out.write_all(s.as_bytes())?;
    out.flush()?;
    Ok(s.len())
}
