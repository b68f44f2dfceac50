//! Static SVG line charts: stacked panels sharing the time axis, linear
//! axes, a legend per panel and optional shaded bands.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Result, SicaError};
use crate::output::write_text;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Shaded `(lower, upper)` envelope drawn under the line.
    pub band: Option<(Vec<f64>, Vec<f64>)>,
    pub color: Option<String>,
}

impl Series {
    pub fn new(label: impl Into<String>, times: Vec<f64>, values: Vec<f64>) -> Self {
        Series {
            label: label.into(),
            times,
            values,
            band: None,
            color: None,
        }
    }

    pub fn with_band(mut self, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        self.band = Some((lower, upper));
        self
    }

    pub fn with_color(mut self, color: impl Into<String>) -> Self {
        self.color = Some(color.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub y_label: String,
    pub series: Vec<Series>,
}

impl Panel {
    pub fn new(y_label: impl Into<String>, series: Vec<Series>) -> Self {
        Panel {
            y_label: y_label.into(),
            series,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Styling {
    pub title: String,
    pub x_label: String,
    pub width: f64,
    pub panel_height: f64,
}

impl Default for Styling {
    fn default() -> Self {
        Styling {
            title: String::new(),
            x_label: "t".to_string(),
            width: 900.0,
            panel_height: 260.0,
        }
    }
}

pub const MARGIN_LEFT: f64 = 90.0;
pub const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 40.0;
const PANEL_GAP: f64 = 50.0;
const MARGIN_BOTTOM: f64 = 55.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Tick positions at 1, 2 or 5 times a power of ten, about `target` of them.
fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let raw = (hi - lo) / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|&s| s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn fmt_tick(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else if x.abs() >= 1e5 || x.abs() < 1e-3 {
        format!("{x:.1e}")
    } else {
        let s = format!("{x:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn finite_range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    values
        .filter(|v| v.is_finite())
        .fold(None, |acc, v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
}

fn pad_range((lo, hi): (f64, f64)) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { 0.05 * lo.abs() };
        (lo - pad, hi + pad)
    }
}

/// Renders the figure. Output depends only on the inputs.
pub fn render_svg(panels: &[Panel], style: &Styling) -> Result<String> {
    if panels.is_empty() || panels.iter().any(|p| p.series.is_empty()) {
        return Err(SicaError::domain("a plot needs at least one series per panel"));
    }
    for s in panels.iter().flat_map(|p| &p.series) {
        let band_ok = s.band.as_ref().is_none_or(|(lo, hi)| lo.len() == s.times.len() && hi.len() == s.times.len());
        if s.times.len() != s.values.len() || s.times.is_empty() || !band_ok {
            return Err(SicaError::domain(format!("series `{}` has an inconsistent grid", s.label)));
        }
    }
    let (t_lo, t_hi) = pad_range(
        finite_range(panels.iter().flat_map(|p| &p.series).flat_map(|s| s.times.iter().copied()))
            .ok_or_else(|| SicaError::domain("no finite time values"))?,
    );

    let plot_w = style.width - MARGIN_LEFT - MARGIN_RIGHT;
    let ph = style.panel_height;
    let height = MARGIN_TOP + panels.len() as f64 * ph + (panels.len() - 1) as f64 * PANEL_GAP + MARGIN_BOTTOM;
    let x_px = |t: f64| MARGIN_LEFT + (t - t_lo) / (t_hi - t_lo) * plot_w;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}" font-family="sans-serif" font-size="12">"#,
        w = style.width,
        h = height
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{:.0}" height="{height:.0}" fill="white"/>"#, style.width);
    if !style.title.is_empty() {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            MARGIN_LEFT + plot_w / 2.0,
            escape(&style.title)
        );
    }

    let mut color_idx = 0;
    for (pi, panel) in panels.iter().enumerate() {
        let top = MARGIN_TOP + pi as f64 * (ph + PANEL_GAP);
        let bottom = top + ph;
        let ys = panel.series.iter().flat_map(|s| {
            let band = s.band.iter().flat_map(|(lo, hi)| lo.iter().chain(hi));
            s.values.iter().chain(band).copied()
        });
        let (y_lo, y_hi) = pad_range(finite_range(ys).unwrap_or((0.0, 1.0)));
        let y_px = |y: f64| bottom - (y - y_lo) / (y_hi - y_lo) * ph;

        let _ = writeln!(svg, r#"<g class="panel" id="panel-{pi}">"#);
        for t in nice_ticks(t_lo, t_hi, 8) {
            let x = x_px(t);
            let _ = writeln!(svg, r##"<line x1="{x:.2}" y1="{top:.2}" x2="{x:.2}" y2="{bottom:.2}" stroke="#e6e6e6"/>"##);
            let _ = writeln!(
                svg,
                r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                bottom + 16.0,
                fmt_tick(t)
            );
        }
        for y in nice_ticks(y_lo, y_hi, 5) {
            let yp = y_px(y);
            let _ = writeln!(
                svg,
                r##"<line x1="{MARGIN_LEFT:.2}" y1="{yp:.2}" x2="{:.2}" y2="{yp:.2}" stroke="#e6e6e6"/>"##,
                MARGIN_LEFT + plot_w
            );
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                MARGIN_LEFT - 6.0,
                yp + 4.0,
                fmt_tick(y)
            );
        }
        let _ = writeln!(
            svg,
            r#"<rect x="{MARGIN_LEFT:.2}" y="{top:.2}" width="{plot_w:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#
        );
        let _ = writeln!(
            svg,
            r#"<text transform="translate({:.2},{:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
            MARGIN_LEFT - 62.0,
            top + ph / 2.0,
            escape(&panel.y_label)
        );

        for (si, s) in panel.series.iter().enumerate() {
            let color = s.color.clone().unwrap_or_else(|| {
                let c = PALETTE[color_idx % PALETTE.len()].to_string();
                color_idx += 1;
                c
            });
            if let Some((lo, hi)) = &s.band {
                let mut pts = String::new();
                for (t, y) in s.times.iter().zip(hi) {
                    let _ = write!(pts, "{:.2},{:.2} ", x_px(*t), y_px(*y));
                }
                for (t, y) in s.times.iter().zip(lo).rev() {
                    let _ = write!(pts, "{:.2},{:.2} ", x_px(*t), y_px(*y));
                }
                let _ = writeln!(
                    svg,
                    r#"<polygon class="band" points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
                    pts.trim_end()
                );
            }
            let mut pts = String::new();
            for (t, y) in s.times.iter().zip(&s.values) {
                if y.is_finite() {
                    let _ = write!(pts, "{:.2},{:.2} ", x_px(*t), y_px(*y));
                }
            }
            let _ = writeln!(
                svg,
                r#"<polyline class="series" points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                pts.trim_end()
            );
            let ly = top + 14.0 + 18.0 * si as f64;
            let lx = MARGIN_LEFT + plot_w + 12.0;
            let _ = writeln!(
                svg,
                r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="3"/>"#,
                lx + 22.0
            );
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
                lx + 28.0,
                ly + 4.0,
                escape(&s.label)
            );
        }
        let _ = writeln!(svg, "</g>");
    }
    let last_bottom = MARGIN_TOP + panels.len() as f64 * (ph + PANEL_GAP) - PANEL_GAP;
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        last_bottom + 40.0,
        escape(&style.x_label)
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn emit_svg_plot(panels: &[Panel], style: &Styling, path: impl AsRef<Path>) -> Result<()> {
    let svg = render_svg(panels, style)?;
    write_text(path, &svg)
}
