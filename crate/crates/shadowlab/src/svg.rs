//! Minimal static SVG line plots.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 460.0;
const LEFT: f64 = 78.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

#[derive(Clone, Debug, PartialEq)]
pub enum Style {
    Solid,
    Dashed,
    /// Markers with optional error bars; no connecting line.
    Points,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    /// Half-widths of error bars (Points style only).
    pub errors: Option<Vec<f64>>,
    pub style: Style,
    /// Palette index; series sharing a colour belong together.
    pub colour: usize,
}

impl Series {
    pub fn line(label: impl Into<String>, points: Vec<(f64, f64)>, colour: usize) -> Self {
        Series { label: label.into(), points, errors: None, style: Style::Solid, colour }
    }

    pub fn dashed(label: impl Into<String>, points: Vec<(f64, f64)>, colour: usize) -> Self {
        Series { label: label.into(), points, errors: None, style: Style::Dashed, colour }
    }

    pub fn markers(label: impl Into<String>, points: Vec<(f64, f64)>, errors: Option<Vec<f64>>, colour: usize) -> Self {
        Series { label: label.into(), points, errors, style: Style::Points, colour }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Horizontal reference lines (value, label).
    pub references: Vec<(f64, String)>,
    /// Plot log₂ of y (positive values only).
    pub log2_y: bool,
}

impl Plot {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Plot {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            series: Vec::new(),
            references: Vec::new(),
            log2_y: false,
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn nice_step(span: f64) -> f64 {
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let r = raw / mag;
    let m = if r < 1.5 {
        1.0
    } else if r < 3.5 {
        2.0
    } else if r < 7.5 {
        5.0
    } else {
        10.0
    };
    m * mag
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let step = nice_step(hi - lo);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + step * 1e-9 {
        out.push(if t.abs() < step * 1e-9 { 0.0 } else { t });
        t += step;
    }
    out
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if v.abs() >= 1e-3 && v.abs() < 1e4 {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.1e}")
    }
}

fn range(vals: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in vals.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo > hi {
        return None;
    }
    if hi - lo < 1e-12 {
        let pad = if lo.abs() > 0.0 { lo.abs() * 0.05 } else { 1.0 };
        return Some((lo - pad, hi + pad));
    }
    let pad = (hi - lo) * 0.05;
    Some((lo - pad, hi + pad))
}

/// Renders the plot; identical inputs give identical bytes.
pub fn render(plot: &Plot) -> String {
    let ty = |y: f64| if plot.log2_y { y.log2() } else { y };
    let xs = plot.series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let ys = plot.series.iter().flat_map(|s| {
        let errs = s.errors.clone().unwrap_or_default();
        s.points.iter().enumerate().flat_map(move |(i, p)| {
            let e = errs.get(i).copied().unwrap_or(0.0);
            [p.1 - e, p.1 + e]
        })
    });
    let refs = plot.references.iter().map(|r| r.0);
    let (x0, x1) = range(xs).unwrap_or((0.0, 1.0));
    let (y0, y1) = range(ys.chain(refs).filter(|y| !plot.log2_y || *y > 0.0).map(ty)).unwrap_or((0.0, 1.0));
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let py = |y: f64| TOP + (1.0 - (ty(y) - y0) / (y1 - y0)) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#, LEFT + pw / 2.0, escape(&plot.title));
    let _ = writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for t in ticks(x0, x1) {
        let x = px(t);
        let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/>"#, TOP + ph, TOP + ph + 5.0);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#, TOP + ph + 19.0, fmt_tick(t));
    }
    for t in ticks(y0, y1) {
        let y = TOP + (1.0 - (t - y0) / (y1 - y0)) * ph;
        let _ = writeln!(s, r#"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"#, LEFT - 5.0);
        let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#e0e0e0"/>"##, LEFT + pw);
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 8.0, y + 4.0, fmt_tick(t));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, HEIGHT - 15.0, escape(&plot.x_label));
    let y_label = if plot.log2_y { format!("log2 {}", plot.y_label) } else { plot.y_label.clone() };
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&y_label)
    );
    for (v, label) in &plot.references {
        if plot.log2_y && *v <= 0.0 {
            continue;
        }
        let y = py(*v);
        let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#2ca02c" stroke-width="1.5"/>"##, LEFT + pw);
        let _ = writeln!(s, r##"<text x="{}" y="{:.2}" fill="#2ca02c">{}</text>"##, LEFT + pw - 4.0 - 6.0 * label.len() as f64, y - 4.0, escape(label));
    }
    for (i, series) in plot.series.iter().enumerate() {
        let colour = PALETTE[series.colour % PALETTE.len()];
        let pts: Vec<(f64, f64)> = series.points.iter().filter(|p| !plot.log2_y || p.1 > 0.0).copied().collect();
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let (dash, width, opacity) = match series.style {
            Style::Solid => ("", 2.0, 1.0),
            Style::Dashed => (r#" stroke-dasharray="6 4""#, 2.0, 1.0),
            Style::Points => ("", 0.5, 0.35),
        };
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="{width}" stroke-opacity="{opacity}"{dash} points="{}"><title>{}</title></polyline>"#,
            coords.join(" "),
            escape(&series.label)
        );
        if series.style == Style::Points {
            for (j, &(x, y)) in pts.iter().enumerate() {
                if let Some(e) = series.errors.as_ref().and_then(|e| e.get(j)) {
                    let _ = writeln!(
                        s,
                        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{colour}"/>"#,
                        px(x),
                        py(y - e),
                        px(x),
                        py(y + e)
                    );
                }
                let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{colour}"/>"#, px(x), py(y));
            }
        }
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = WIDTH - RIGHT + 12.0;
        let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{colour}" stroke-width="2"{dash}/>"#, lx + 22.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 28.0, ly + 4.0, escape(&series.label));
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_polyline_per_series() {
        let mut p = Plot::new("t", "x <axis>", "y");
        p.series.push(Series::line("a", vec![(0.0, 1.0), (1.0, 2.0)], 0));
        p.series.push(Series::markers("b", vec![(0.0, 1.5), (1.0, 2.5)], Some(vec![0.1, 0.1]), 1));
        let svg = render(&p);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("x &lt;axis&gt;"));
        assert_eq!(svg, render(&p));
    }

    #[test]
    fn empty_plot_renders() {
        let svg = render(&Plot::new("empty", "x", "y"));
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }

    #[test]
    fn ticks_cover_range() {
        let t = ticks(0.0, 0.5);
        assert_eq!(t.first(), Some(&0.0));
        assert!((t.last().unwrap() - 0.5).abs() < 1e-12);
    }
}
