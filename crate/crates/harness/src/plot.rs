//! Line charts with confidence bands, rendered from result CSVs to SVG.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{HarnessError, Result};
use crate::stats::{ci95, mean};

#[derive(Debug, Clone, Default)]
pub struct PlotSpec {
    pub x: String,
    pub y: String,
    /// Column whose values split rows into lines.
    pub group: Option<String>,
    /// Column holding a precomputed band half-width; otherwise repeated
    /// rows at one x are summarized by their mean and 95% interval.
    pub band: Option<String>,
    /// `(column, value)` pairs that rows must match.
    pub filters: Vec<(String, String)>,
    pub log_x: bool,
    pub log_y: bool,
    pub title: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    /// `(x, y, half-width)` sorted by x.
    pub points: Vec<(f64, f64, f64)>,
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers.iter().position(|h| h == name).ok_or_else(|| {
        let known: Vec<&str> = headers.iter().collect();
        HarnessError::Config(format!("no column {name:?}; columns are {known:?}"))
    })
}

fn parse(field: &str, name: &str) -> Result<f64> {
    field.parse().map_err(|_| HarnessError::Config(format!("column {name:?} has non-numeric value {field:?}")))
}

/// Groups, filters and summarizes CSV rows into plottable series.
pub fn series_from_csv<R: std::io::Read>(input: R, spec: &PlotSpec) -> Result<Vec<Series>> {
    let mut rd = csv::Reader::from_reader(input);
    let headers = rd.headers()?.clone();
    let xi = column(&headers, &spec.x)?;
    let yi = column(&headers, &spec.y)?;
    let gi = spec.group.as_deref().map(|g| column(&headers, g)).transpose()?;
    let bi = spec.band.as_deref().map(|b| column(&headers, b)).transpose()?;
    let filters: Vec<(usize, &str)> =
        spec.filters.iter().map(|(c, v)| Ok((column(&headers, c)?, v.as_str()))).collect::<Result<_>>()?;

    let mut order: Vec<String> = Vec::new();
    let mut cells: BTreeMap<(usize, u64), (f64, Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for rec in rd.records() {
        let rec = rec?;
        if filters.iter().any(|(i, v)| &rec[*i] != *v) {
            continue;
        }
        if rec[yi].is_empty() {
            continue;
        }
        let name = gi.map_or_else(|| spec.y.clone(), |g| rec[g].to_string());
        let g = match order.iter().position(|o| *o == name) {
            Some(g) => g,
            None => {
                order.push(name);
                order.len() - 1
            }
        };
        let x = parse(&rec[xi], &spec.x)?;
        let entry = cells.entry((g, x.to_bits())).or_insert((x, Vec::new(), Vec::new()));
        entry.1.push(parse(&rec[yi], &spec.y)?);
        if let Some(b) = bi {
            entry.2.push(parse(&rec[b], spec.band.as_deref().unwrap_or_default())?);
        }
    }
    let mut series: Vec<Series> = order.into_iter().map(|name| Series { name, points: Vec::new() }).collect();
    for ((g, _), (x, ys, bands)) in cells {
        let half = if bands.is_empty() { if ys.len() > 1 { ci95(&ys) } else { 0.0 } } else { mean(&bands) };
        series[g].points.push((x, mean(&ys), half));
    }
    for s in &mut series {
        s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    Ok(series)
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 10] =
    ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick_label(v: f64, log: bool) -> String {
    let v = if log { 10f64.powf(v) } else { v };
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        format!("{}", (v * 1000.0).round() / 1000.0)
    }
}

/// Renders the series as an SVG document.
pub fn render_svg(series: &[Series], spec: &PlotSpec) -> Result<String> {
    let tx = |v: f64| if spec.log_x { v.log10() } else { v };
    let ty = |v: f64| if spec.log_y { v.max(f64::MIN_POSITIVE).log10() } else { v };
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for s in series {
        for &(x, y, h) in &s.points {
            if spec.log_x && x <= 0.0 {
                return Err(HarnessError::Config(format!("log x axis needs positive x, found {x}")));
            }
            xs.push(tx(x));
            ys.push(ty(y - h));
            ys.push(ty(y + h));
        }
    }
    if xs.is_empty() {
        return Err(HarnessError::Config("no rows to plot".into()));
    }
    let bounds = |v: &[f64]| {
        let lo = v.iter().copied().filter(|x| x.is_finite()).fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().filter(|x| x.is_finite()).fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            (lo, hi)
        } else {
            (lo - 0.5, lo + 0.5)
        }
    };
    let (x0, x1) = bounds(&xs);
    let (y0, y1) = bounds(&ys);
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |v: f64| LEFT + (tx(v) - x0) / (x1 - x0) * pw;
    let py = |v: f64| TOP + ph - (ty(v).clamp(y0, y1) - y0) / (y1 - y0) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let title = spec.title.clone().unwrap_or_else(|| format!("{} vs {}", spec.y, spec.x));
    let _ = writeln!(svg, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#, LEFT + pw / 2.0, escape(&title));
    let _ = writeln!(
        svg,
        r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>"##
    );
    for k in 0..=5 {
        let f = k as f64 / 5.0;
        let gx = LEFT + f * pw;
        let gy = TOP + ph - f * ph;
        let _ = writeln!(svg, r##"<line x1="{gx}" y1="{TOP}" x2="{gx}" y2="{}" stroke="#ddd"/>"##, TOP + ph);
        let _ = writeln!(svg, r##"<line x1="{LEFT}" y1="{gy}" x2="{}" y2="{gy}" stroke="#ddd"/>"##, LEFT + pw);
        let _ = writeln!(
            svg,
            r#"<text x="{gx}" y="{}" text-anchor="middle">{}</text>"#,
            TOP + ph + 16.0,
            tick_label(x0 + f * (x1 - x0), spec.log_x)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            gy + 4.0,
            tick_label(y0 + f * (y1 - y0), spec.log_y)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{}{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 12.0,
        escape(&spec.x),
        if spec.log_x { " (log)" } else { "" }
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&spec.y),
        if spec.log_y { " (log)" } else { "" }
    );
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        if s.points.iter().any(|p| p.2 > 0.0) {
            let upper: Vec<String> = s.points.iter().map(|&(x, y, h)| format!("{:.2},{:.2}", px(x), py(y + h))).collect();
            let lower: Vec<String> =
                s.points.iter().rev().map(|&(x, y, h)| format!("{:.2},{:.2}", px(x), py(y - h))).collect();
            let _ = writeln!(
                svg,
                r#"<polygon points="{} {}" fill="{color}" fill-opacity="0.18" stroke="none"/>"#,
                upper.join(" "),
                lower.join(" ")
            );
        }
        let line: Vec<String> = s.points.iter().map(|&(x, y, _)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, line.join(" "));
        for &(x, y, _) in &s.points {
            let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, px(x), py(y));
        }
        let ly = TOP + 10.0 + 18.0 * k as f64;
        let lx = LEFT + pw + 14.0;
        let _ = writeln!(svg, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="3"/>"#, lx + 20.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, escape(&s.name));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CSV: &str = "estimator,n,avg_value,eval_radius\n\
                       a,1,1.0,0\na,1,3.0,0\na,10,4.0,0\nb,1,0.5,0\nb,10,0.7,0\nb,10,9.0,0.1\n";

    fn spec() -> PlotSpec {
        PlotSpec {
            x: "n".into(),
            y: "avg_value".into(),
            group: Some("estimator".into()),
            filters: vec![("eval_radius".into(), "0".into())],
            log_x: true,
            ..PlotSpec::default()
        }
    }

    #[test]
    fn rows_are_grouped_filtered_and_averaged() {
        let series = series_from_csv(CSV.as_bytes(), &spec()).unwrap();
        assert_eq!(series.len(), 2);
        assert_eq!(series[0].name, "a");
        assert_eq!(series[0].points[0].0, 1.0);
        assert_eq!(series[0].points[0].1, 2.0);
        assert!(series[0].points[0].2 > 0.0);
        assert_eq!(series[1].points, vec![(1.0, 0.5, 0.0), (10.0, 0.7, 0.0)]);
    }

    #[test]
    fn svg_has_one_line_per_series() {
        let series = series_from_csv(CSV.as_bytes(), &spec()).unwrap();
        let svg = render_svg(&series, &spec()).unwrap();
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg.matches("<polygon").count(), 1);
    }

    #[test]
    fn unknown_columns_are_usage_errors() {
        let bad = PlotSpec { y: "nope".into(), ..spec() };
        assert!(matches!(series_from_csv(CSV.as_bytes(), &bad), Err(HarnessError::Config(_))));
    }
}
