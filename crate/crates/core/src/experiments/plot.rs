use std::fmt::Write as _;
use std::path::Path;

use super::SweepRow;
use crate::average::SpectralPoint;
use crate::error::{Error, Result};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#7f7f7f"];

#[derive(Clone, Debug, PartialEq)]
pub struct PlotStyle {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Logarithmic y axis with decade ticks.
    pub log_y: bool,
    /// Multiplies every curve except `<t_T>`; presentation only.
    pub scale_others: f64,
}

impl Default for PlotStyle {
    fn default() -> Self {
        Self {
            title: String::new(),
            x_label: "x".into(),
            y_label: "time (a.u.)".into(),
            log_y: false,
            scale_others: 1.0,
        }
    }
}

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Shortest decimal label for a linear tick.
fn tick_label(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

/// About five round ticks covering `[lo, hi]`.
fn linear_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
        (lo - pad, hi + pad)
    }
}

fn render(series: &[Series], style: &PlotStyle) -> String {
    let keep = |y: f64| y.is_finite() && (!style.log_y || y > 0.0);
    let pts = series
        .iter()
        .flat_map(|s| s.points.iter())
        .filter(|(x, y)| x.is_finite() && keep(*y));
    let (mut x_lo, mut x_hi, mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        let y = if style.log_y { y.log10() } else { y };
        x_lo = x_lo.min(x);
        x_hi = x_hi.max(x);
        y_lo = y_lo.min(y);
        y_hi = y_hi.max(y);
    }
    if !x_lo.is_finite() {
        (x_lo, x_hi, y_lo, y_hi) = (0.0, 1.0, 0.0, 1.0);
    }
    let (x_lo, x_hi) = padded(x_lo, x_hi);
    let (y_lo, y_hi) = if style.log_y {
        padded(y_lo.floor(), y_hi.ceil())
    } else {
        padded(y_lo.min(0.0), y_hi)
    };
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |x: f64| MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = |y: f64| MARGIN_TOP + (y_hi - y) / (y_hi - y_lo) * plot_h;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        escape(&style.title)
    );
    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );

    for x in linear_ticks(x_lo, x_hi) {
        let px = sx(x);
        let _ = writeln!(
            out,
            r#"<line x1="{px:.2}" y1="{y0:.2}" x2="{px:.2}" y2="{y1:.2}" stroke="black"/><text x="{px:.2}" y="{ty:.2}" text-anchor="middle">{}</text>"#,
            tick_label(x),
            y0 = MARGIN_TOP + plot_h,
            y1 = MARGIN_TOP + plot_h + 5.0,
            ty = MARGIN_TOP + plot_h + 20.0,
        );
    }
    let y_ticks: Vec<(f64, String)> = if style.log_y {
        (y_lo.ceil() as i64..=y_hi.floor() as i64)
            .map(|e| (e as f64, format!("1e{e}")))
            .collect()
    } else {
        linear_ticks(y_lo, y_hi)
            .into_iter()
            .map(|y| (y, tick_label(y)))
            .collect()
    };
    for (y, label) in y_ticks {
        let py = sy(y);
        let _ = writeln!(
            out,
            r#"<line x1="{x0:.2}" y1="{py:.2}" x2="{MARGIN_LEFT}" y2="{py:.2}" stroke="black"/><text x="{tx:.2}" y="{ty:.2}" text-anchor="end">{label}</text>"#,
            x0 = MARGIN_LEFT - 5.0,
            tx = MARGIN_LEFT - 8.0,
            ty = py + 4.0,
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 15.0,
        escape(&style.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="20" y="{y}" text-anchor="middle" transform="rotate(-90 20 {y})">{}</text>"#,
        escape(&style.y_label),
        y = MARGIN_TOP + plot_h / 2.0,
    );

    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<(f64, f64)> = s
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && keep(*y))
            .map(|&(x, y)| (sx(x), sy(if style.log_y { y.log10() } else { y })))
            .collect();
        if pts.len() == 1 {
            let _ = writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                pts[0].0, pts[0].1
            );
        } else if !pts.is_empty() {
            let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                path.join(" ")
            );
        }
        let ly = MARGIN_TOP + 15.0 + 18.0 * i as f64;
        let lx = WIDTH - MARGIN_RIGHT + 10.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 20.0,
            lx + 25.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn write(path: &Path, svg: &str) -> Result<()> {
    std::fs::write(path, svg).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// SVG of `<t_T>`, `<t_R>`, mean dwell time and `t_free` against the swept value.
pub fn emit_plot(rows: &[SweepRow], style: &PlotStyle, path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::InvalidSweep("cannot plot an empty sweep".into()));
    }
    let f = style.scale_others;
    let suffix = if f != 1.0 { format!(" x {f}") } else { String::new() };
    let curve = |label: String, get: &dyn Fn(&SweepRow) -> f64| Series {
        label,
        points: rows.iter().map(|r| (r.x, get(r))).collect(),
    };
    let series = [
        curve("<t_T>".into(), &|r| r.avg_t),
        curve(format!("<t_R>{suffix}"), &|r| f * r.avg_r),
        curve(format!("mean dwell{suffix}"), &|r| f * r.mean_dwell),
        curve(format!("t_free{suffix}"), &|r| f * r.t_free),
    ];
    write(path, &render(&series, style))
}

/// SVG of the incident and transmitted wave-number densities.
pub fn emit_spectrum_plot(points: &[SpectralPoint], style: &PlotStyle, path: &Path) -> Result<()> {
    if points.is_empty() {
        return Err(Error::InvalidSweep("cannot plot an empty spectrum".into()));
    }
    let series = [
        Series {
            label: "incident".into(),
            points: points.iter().map(|p| (p.k, p.rho_inc)).collect(),
        },
        Series {
            label: "transmitted".into(),
            points: points.iter().map(|p| (p.k, p.rho_t)).collect(),
        },
    ];
    write(path, &render(&series, style))
}
