use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;

use super::output::io_err;
use crate::error::{Error, Result};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN_L: f64 = 80.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 60.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeriesStyle {
    Line,
    Dashed,
    Markers,
}

#[derive(Clone, Debug)]
pub struct Series {
    pub name: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub style: SeriesStyle,
}

#[derive(Clone, Debug)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

/// `values[[row, col]]` is drawn at `y = y_range` row, `x = x_range` column.
#[derive(Clone, Debug)]
pub struct Heatmap {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub values: Array2<f64>,
}

#[derive(Clone, Debug)]
pub enum Figure {
    Lines(LinePlot),
    Heat(Heatmap),
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn check_finite(label: &str, values: impl Iterator<Item = f64>) -> Result<()> {
    for (i, v) in values.enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("{label} has {v} at index {i}")));
        }
    }
    Ok(())
}

/// Roughly five round tick positions covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(1e-300);
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * span {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        let d = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        (lo - d, hi + d)
    }
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        MARGIN_L + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - MARGIN_L - MARGIN_R)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN_B - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - MARGIN_T - MARGIN_B)
    }

    fn axes(&self, svg: &mut String, title: &str, x_label: &str, y_label: &str) {
        let (x0, x1) = (MARGIN_L, WIDTH - MARGIN_R);
        let (y0, y1) = (HEIGHT - MARGIN_B, MARGIN_T);
        let _ = writeln!(svg, r##"<rect x="{x0}" y="{y1}" width="{}" height="{}" fill="none" stroke="#000"/>"##, x1 - x0, y0 - y1);
        for t in ticks(self.x.0, self.x.1) {
            let p = self.px(t);
            let _ = writeln!(svg, r##"<line x1="{p:.2}" y1="{y0}" x2="{p:.2}" y2="{}" stroke="#000"/><text x="{p:.2}" y="{}" text-anchor="middle">{}</text>"##, y0 + 5.0, y0 + 20.0, fmt_tick(t));
        }
        for t in ticks(self.y.0, self.y.1) {
            let p = self.py(t);
            let _ = writeln!(svg, r##"<line x1="{}" y1="{p:.2}" x2="{x0}" y2="{p:.2}" stroke="#000"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"##, x0 - 5.0, x0 - 8.0, p + 4.0, fmt_tick(t));
        }
        let _ = writeln!(svg, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, (x0 + x1) / 2.0, escape(title));
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, HEIGHT - 15.0, escape(x_label));
        let cy = (y0 + y1) / 2.0;
        let _ = writeln!(svg, r#"<text x="20" y="{cy}" text-anchor="middle" transform="rotate(-90 20 {cy})">{}</text>"#, escape(y_label));
    }
}

fn fmt_tick(t: f64) -> String {
    let s = format!("{t:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn header() -> String {
    format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">
<rect width="100%" height="100%" fill="white"/>
"#
    )
}

pub fn render_lines(plot: &LinePlot) -> Result<String> {
    for s in &plot.series {
        if s.x.len() != s.y.len() {
            return Err(Error::DimensionMismatch(format!("series {} has {} x and {} y values", s.name, s.x.len(), s.y.len())));
        }
        check_finite(&format!("series {} x", s.name), s.x.iter().copied())?;
        check_finite(&format!("series {} y", s.name), s.y.iter().copied())?;
    }
    let all_x = plot.series.iter().flat_map(|s| s.x.iter().copied());
    let all_y = plot.series.iter().flat_map(|s| s.y.iter().copied());
    let xr = all_x.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let yr = all_y.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let xr = if xr.0.is_finite() { padded(xr.0, xr.1) } else { (0.0, 1.0) };
    let yr = if yr.0.is_finite() { padded(yr.0, yr.1) } else { (0.0, 1.0) };
    let frame = Frame { x: xr, y: yr };
    let mut svg = header();
    frame.axes(&mut svg, &plot.title, &plot.x_label, &plot.y_label);
    for (k, s) in plot.series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        match s.style {
            SeriesStyle::Markers => {
                for (x, y) in s.x.iter().zip(&s.y) {
                    let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="none" stroke="{color}"/>"#, frame.px(*x), frame.py(*y));
                }
            }
            SeriesStyle::Line | SeriesStyle::Dashed => {
                let pts: Vec<String> = s.x.iter().zip(&s.y).map(|(x, y)| format!("{:.2},{:.2}", frame.px(*x), frame.py(*y))).collect();
                let dash = if s.style == SeriesStyle::Dashed { r#" stroke-dasharray="6 4""# } else { "" };
                let _ = writeln!(svg, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#, pts.join(" "));
            }
        }
        let ly = MARGIN_T + 10.0 + 18.0 * k as f64;
        let lx = WIDTH - MARGIN_R + 10.0;
        let _ = writeln!(svg, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#, lx + 20.0, lx + 25.0, ly + 4.0, escape(&s.name));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Viridis-like stops; relative luminance increases monotonically.
const STOPS: [(f64, f64, f64); 5] = [
    (68.0, 1.0, 84.0),
    (59.0, 82.0, 139.0),
    (33.0, 145.0, 140.0),
    (94.0, 201.0, 98.0),
    (253.0, 231.0, 37.0),
];

/// Colormap for `t ∈ [0, 1]` as an RGB triple.
pub fn colormap(t: f64) -> (u8, u8, u8) {
    let t = t.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let i = (t.floor() as usize).min(STOPS.len() - 2);
    let f = t - i as f64;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    let mix = |x: f64, y: f64| (x + (y - x) * f).round() as u8;
    (mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

pub fn render_heatmap(map: &Heatmap) -> Result<String> {
    check_finite(&format!("heatmap {}", map.title), map.values.iter().copied())?;
    let (rows, cols) = map.values.dim();
    let frame = Frame { x: padded(map.x_range.0, map.x_range.1), y: padded(map.y_range.0, map.y_range.1) };
    let lo = map.values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = map.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if rows * cols == 0 { (0.0, 1.0) } else { padded(lo, hi) };
    let mut svg = header();
    let cw = (WIDTH - MARGIN_L - MARGIN_R) / cols.max(1) as f64;
    let ch = (HEIGHT - MARGIN_T - MARGIN_B) / rows.max(1) as f64;
    for r in 0..rows {
        for c in 0..cols {
            let (red, g, b) = colormap((map.values[[r, c]] - lo) / (hi - lo));
            let x = MARGIN_L + c as f64 * cw;
            let y = HEIGHT - MARGIN_B - (r + 1) as f64 * ch;
            let _ = writeln!(svg, r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="rgb({red},{g},{b})"/>"#, cw + 0.3, ch + 0.3);
        }
    }
    frame.axes(&mut svg, &map.title, &map.x_label, &map.y_label);
    // color bar
    let bx = WIDTH - MARGIN_R + 30.0;
    let bh = HEIGHT - MARGIN_T - MARGIN_B;
    for k in 0..64 {
        let (red, g, b) = colormap(k as f64 / 63.0);
        let y = HEIGHT - MARGIN_B - (k + 1) as f64 * bh / 64.0;
        let _ = writeln!(svg, r#"<rect x="{bx}" y="{y:.2}" width="20" height="{:.2}" fill="rgb({red},{g},{b})"/>"#, bh / 64.0 + 0.3);
    }
    let _ = writeln!(svg, r#"<text x="{}" y="{}">{}</text>"#, bx + 25.0, HEIGHT - MARGIN_B, fmt_tick(lo));
    let _ = writeln!(svg, r#"<text x="{}" y="{}">{}</text>"#, bx + 25.0, MARGIN_T + 10.0, format!("{hi:.3e}"));
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Renders and writes a figure. Non-finite data is rejected with its index.
pub fn emit_plot(figure: &Figure, path: &Path) -> Result<()> {
    let svg = match figure {
        Figure::Lines(p) => render_lines(p)?,
        Figure::Heat(h) => render_heatmap(h)?,
    };
    std::fs::write(path, svg).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn luminance((r, g, b): (u8, u8, u8)) -> f64 {
        let lin = |c: u8| {
            let c = c as f64 / 255.0;
            if c <= 0.04045 { c / 12.92 } else { ((c + 0.055) / 1.055).powf(2.4) }
        };
        0.2126 * lin(r) + 0.7152 * lin(g) + 0.0722 * lin(b)
    }

    #[test]
    fn colormap_luminance_is_monotone() {
        let lum: Vec<f64> = (0..=255).map(|k| luminance(colormap(k as f64 / 255.0))).collect();
        // u8 rounding jitters neighbours by ~1e-4
        assert!(lum.windows(2).all(|w| w[1] >= w[0] - 1e-3));
        assert!(lum[255] > lum[0] + 0.5);
    }

    #[test]
    fn nan_rejected_with_index() {
        let plot = LinePlot {
            title: "t".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            series: vec![Series { name: "a".into(), x: vec![0.0, 1.0, 2.0], y: vec![1.0, f64::NAN, 0.0], style: SeriesStyle::Line }],
        };
        let err = render_lines(&plot).unwrap_err().to_string();
        assert!(err.contains("index 1"), "{err}");
        let map = Heatmap {
            title: "h".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            x_range: (0.0, 1.0),
            y_range: (0.0, 1.0),
            values: ndarray::array![[0.0, f64::INFINITY]],
        };
        assert!(render_heatmap(&map).is_err());
    }

    #[test]
    fn svg_has_legend_and_labels() {
        let plot = LinePlot {
            title: "populations".into(),
            x_label: "t/(2π/ω_a)".into(),
            y_label: "P_e".into(),
            series: vec![
                Series { name: "dicke".into(), x: vec![0.0, 1.0], y: vec![1.0, 0.5], style: SeriesStyle::Line },
                Series { name: "band".into(), x: vec![0.0, 1.0], y: vec![1.0, 0.5], style: SeriesStyle::Dashed },
            ],
        };
        let svg = render_lines(&plot).unwrap();
        assert!(svg.starts_with("<svg"));
        for needle in ["dicke", "band", "t/(2π/ω_a)", "P_e", "polyline"] {
            assert!(svg.contains(needle), "{needle}");
        }
    }

    #[test]
    fn tick_positions() {
        let t = ticks(0.0, 1.0);
        assert_eq!(t.len(), 6);
        assert!(t.iter().enumerate().all(|(k, v)| (v - 0.2 * k as f64).abs() < 1e-12));
        assert!(ticks(-0.5, 0.5).contains(&0.0));
    }
}
