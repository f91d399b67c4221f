//! Minimal self-contained SVG charts.
//!
//! Axes autoscale to the data with a 5% margin on each side. Line charts
//! draw exactly one `<polyline>` per series.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const TICKS: usize = 5;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

pub fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

/// Escapes text for use in element content and attribute values.
pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

/// Data range padded by 5% on each side; degenerate ranges widen to ±1.
fn padded(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 1.0, hi + 1.0);
    }
    let m = 0.05 * (hi - lo);
    (lo - m, hi + m)
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }
}

/// Round tick values (1, 2 or 5 times a power of ten) inside `range`.
fn nice_ticks(range: (f64, f64)) -> Vec<f64> {
    let raw = (range.1 - range.0) / TICKS as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|m| m * mag)
        .find(|&s| s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (range.0 / step).ceil() as i64;
    let last = (range.1 / step).floor() as i64;
    // Integer multiples avoid accumulated drift such as 0.30000000000000004.
    (first..=last).map(|i| i as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e5).contains(&a) {
        format!("{v:.2e}")
    } else if a >= 100.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.3}").trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn open(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">
<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>
<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        (WIDTH - RIGHT + LEFT) / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, f: &Frame, x_label: &str, y_label: &str, x_ticks: bool) {
    let (x0, x1) = (LEFT, WIDTH - RIGHT);
    let (y0, y1) = (HEIGHT - BOTTOM, TOP);
    let _ = writeln!(
        out,
        r#"<g stroke="black" stroke-width="1"><line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}"/><line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}"/></g>"#
    );
    for yv in nice_ticks(f.y) {
        let py = f.py(yv);
        let _ = writeln!(
            out,
            r##"<line x1="{}" y1="{py:.2}" x2="{x0}" y2="{py:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"##,
            x0 - 4.0,
            x0 - 6.0,
            py + 4.0,
            fmt_tick(yv)
        );
    }
    if x_ticks {
        for xv in nice_ticks(f.x) {
            let px = f.px(xv);
            let _ = writeln!(
                out,
                r#"<line x1="{px:.2}" y1="{y0}" x2="{px:.2}" y2="{}" stroke="black"/><text x="{px:.2}" y="{}" text-anchor="middle">{}</text>"#,
                y0 + 4.0,
                y0 + 18.0,
                fmt_tick(xv)
            );
        }
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>
<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 10.0,
        escape(x_label),
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

fn legend(out: &mut String, names: &[&str]) {
    let x = WIDTH - RIGHT + 14.0;
    for (i, name) in names.iter().enumerate() {
        let y = TOP + 10.0 + 18.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<rect x="{x}" y="{}" width="14" height="10" fill="{}"/><text x="{}" y="{}">{}</text>"#,
            y - 9.0,
            color(i),
            x + 20.0,
            y,
            escape(name)
        );
    }
}

/// One polyline per series.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let f = Frame {
        x: padded(series.iter().flat_map(|s| s.points.iter().map(|p| p.0))),
        y: padded(series.iter().flat_map(|s| s.points.iter().map(|p| p.1))),
    };
    let mut out = String::new();
    open(&mut out, title);
    axes(&mut out, &f, x_label, y_label, true);
    for (i, s) in series.iter().enumerate() {
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{}" stroke-width="2" points="{}"><title>{}</title></polyline>"#,
            color(i),
            pts.join(" "),
            escape(&s.name)
        );
    }
    let names: Vec<&str> = series.iter().map(|s| s.name.as_str()).collect();
    legend(&mut out, &names);
    out.push_str("</svg>\n");
    out
}

/// Box statistics with Tukey whiskers: the most extreme observations within
/// 1.5 IQR of the quartiles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxStats {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub lo_whisker: f64,
    pub hi_whisker: f64,
}

impl BoxStats {
    pub fn of(values: &[f64]) -> Self {
        let q = super::Quantiles::of(values);
        let iqr = q.q3 - q.q1;
        let (lo_fence, hi_fence) = (q.q1 - 1.5 * iqr, q.q3 + 1.5 * iqr);
        let inside = values.iter().copied().filter(|v| *v >= lo_fence && *v <= hi_fence);
        let lo = inside.clone().fold(f64::INFINITY, f64::min);
        let hi = inside.fold(f64::NEG_INFINITY, f64::max);
        BoxStats {
            q1: q.q1,
            median: q.median,
            q3: q.q3,
            lo_whisker: lo.min(q.q1),
            hi_whisker: hi.max(q.q3),
        }
    }
}

/// A box group: a category label with one sample per series.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxGroup {
    pub label: String,
    pub samples: Vec<Vec<f64>>,
}

/// Side-by-side boxplots; outliers beyond the whiskers are drawn as dots.
pub fn boxplot_chart(title: &str, y_label: &str, series_names: &[&str], groups: &[BoxGroup]) -> String {
    let all = groups.iter().flat_map(|g| g.samples.iter().flatten().copied());
    let f = Frame {
        x: (0.0, groups.len().max(1) as f64),
        y: padded(all),
    };
    let mut out = String::new();
    open(&mut out, title);
    axes(&mut out, &f, "", y_label, false);
    let slots = series_names.len().max(1) as f64;
    for (gi, g) in groups.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
            f.px(gi as f64 + 0.5),
            HEIGHT - BOTTOM + 18.0,
            escape(&g.label)
        );
        for (si, sample) in g.samples.iter().enumerate() {
            if sample.is_empty() {
                continue;
            }
            let b = BoxStats::of(sample);
            let w = 0.8 / slots;
            let left = gi as f64 + 0.1 + w * si as f64;
            let (xl, xr, xm) = (f.px(left + 0.1 * w), f.px(left + 0.9 * w), f.px(left + 0.5 * w));
            let c = color(si);
            let _ = writeln!(
                out,
                r#"<g stroke="{c}" stroke-width="1.5"><line x1="{xm:.2}" y1="{:.2}" x2="{xm:.2}" y2="{:.2}"/><line x1="{xm:.2}" y1="{:.2}" x2="{xm:.2}" y2="{:.2}"/><rect x="{xl:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{c}" fill-opacity="0.25"/><line x1="{xl:.2}" y1="{:.2}" x2="{xr:.2}" y2="{:.2}" stroke-width="2.5"/></g>"#,
                f.py(b.hi_whisker),
                f.py(b.q3),
                f.py(b.q1),
                f.py(b.lo_whisker),
                f.py(b.q3),
                xr - xl,
                (f.py(b.q1) - f.py(b.q3)).max(0.5),
                f.py(b.median),
                f.py(b.median),
            );
            for &v in sample.iter().filter(|&&v| v < b.lo_whisker || v > b.hi_whisker) {
                let _ = writeln!(out, r#"<circle cx="{xm:.2}" cy="{:.2}" r="2.5" fill="{c}"/>"#, f.py(v));
            }
        }
    }
    legend(&mut out, series_names);
    out.push_str("</svg>\n");
    out
}

/// Stacked area chart of per-round shares; `rows[t]` must sum to 1.
pub fn stacked_chart(title: &str, x_label: &str, layer_names: &[String], rows: &[Vec<f64>]) -> String {
    let n = rows.len();
    let f = Frame {
        x: (1.0, n.max(2) as f64),
        y: (0.0, 1.0),
    };
    let mut out = String::new();
    open(&mut out, title);
    axes(&mut out, &f, x_label, "share of pulls", true);
    let mut base = vec![0.0; n];
    for (li, _) in layer_names.iter().enumerate() {
        let top: Vec<f64> = base.iter().zip(rows).map(|(b, r)| b + r.get(li).copied().unwrap_or(0.0)).collect();
        let mut pts: Vec<String> = (0..n).map(|t| format!("{:.2},{:.2}", f.px((t + 1) as f64), f.py(top[t]))).collect();
        pts.extend((0..n).rev().map(|t| format!("{:.2},{:.2}", f.px((t + 1) as f64), f.py(base[t]))));
        let _ = writeln!(out, r#"<polygon fill="{}" fill-opacity="0.8" points="{}"/>"#, color(li), pts.join(" "));
        base = top;
    }
    let names: Vec<&str> = layer_names.iter().map(String::as_str).collect();
    legend(&mut out, &names);
    out.push_str("</svg>\n");
    out
}
