//! Minimal SVG line plots of a time series.

use std::fmt::Write as _;

use crate::harness::RatioKind;
use crate::model::TimeSeries;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PlotKind {
    /// `M_k(n) / n` against `log n`, with horizontal references at the
    /// given limits.
    Ratio,
    /// `log M_1` against `log n`, with a reference line of the given slope
    /// through the last point.
    LogLog,
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let sx = (x - self.x.0) / (self.x.1 - self.x.0).max(1e-12);
        let sy = (y - self.y.0) / (self.y.1 - self.y.0).max(1e-12);
        (MARGIN + sx * (WIDTH - 2.0 * MARGIN), HEIGHT - MARGIN - sy * (HEIGHT - 2.0 * MARGIN))
    }
}

fn polyline(svg: &mut String, pts: &[(f64, f64)], color: &str, dashed: bool) {
    if pts.is_empty() {
        return;
    }
    let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    let dash = if dashed { " stroke-dasharray=\"6,4\"" } else { "" };
    writeln!(
        svg,
        "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"{dash} points=\"{}\"/>",
        coords.join(" ")
    )
    .unwrap();
}

/// Renders `series` as an SVG document. `reference` holds the limits
/// `x_k*` for [`PlotKind::Ratio`] or a single slope for [`PlotKind::LogLog`].
pub fn render_svg(series: &TimeSeries, kind: PlotKind, reference: &[f64], title: &str) -> String {
    let rows: Vec<_> = series.rows.iter().filter(|r| r.n > 0).collect();
    let lines: Vec<Vec<(f64, f64)>> = match kind {
        PlotKind::Ratio => (1..=series.track_k)
            .map(|k| rows.iter().map(|r| ((r.n as f64).log10(), RatioKind::MkOverN(k).apply(r.n, &r.top))).collect())
            .collect(),
        PlotKind::LogLog => vec![rows
            .iter()
            .filter(|r| r.top[0] > 0)
            .map(|r| ((r.n as f64).log10(), (r.top[0] as f64).log10()))
            .collect()],
    };
    let all = lines.iter().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if kind == PlotKind::Ratio {
        y0 = y0.min(0.0);
        for &r in reference {
            y1 = y1.max(r * 1.05);
        }
    }
    let frame = Frame { x: (x0, x1), y: (y0, y1) };

    let mut svg = String::new();
    writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    )
    .unwrap();
    writeln!(svg, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>").unwrap();
    writeln!(
        svg,
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">{}</text>",
        WIDTH / 2.0,
        escape(title)
    )
    .unwrap();
    let (ax0, ay0) = frame.map(x0, y0);
    let (ax1, ay1) = frame.map(x1, y1);
    writeln!(svg, "<path d=\"M{ax0:.2},{ay1:.2} L{ax0:.2},{ay0:.2} L{ax1:.2},{ay0:.2}\" stroke=\"black\" fill=\"none\"/>").unwrap();
    let (xlabel, ylabel) = match kind {
        PlotKind::Ratio => ("log10 n", "M_k(n) / n"),
        PlotKind::LogLog => ("log10 n", "log10 M_1(n)"),
    };
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let xv = x0 + t * (x1 - x0);
        let yv = y0 + t * (y1 - y0);
        let (px, _) = frame.map(xv, y0);
        let (_, py) = frame.map(x0, yv);
        writeln!(svg, "<text x=\"{px:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">{xv:.2}</text>", ay0 + 16.0).unwrap();
        writeln!(svg, "<text x=\"{:.2}\" y=\"{py:.2}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{yv:.3}</text>", ax0 - 6.0).unwrap();
    }
    writeln!(svg, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">{xlabel}</text>", WIDTH / 2.0, HEIGHT - 18.0).unwrap();
    writeln!(svg, "<text x=\"16\" y=\"{}\" transform=\"rotate(-90 16 {})\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">{ylabel}</text>", HEIGHT / 2.0, HEIGHT / 2.0).unwrap();

    match kind {
        PlotKind::Ratio => {
            for (i, &r) in reference.iter().enumerate() {
                let pts = [frame.map(x0, r), frame.map(x1, r)];
                polyline(&mut svg, &pts, COLORS[i % COLORS.len()], true);
            }
        }
        PlotKind::LogLog => {
            if let (Some(&slope), Some(&(lx, ly))) = (reference.first(), lines[0].last()) {
                let pts = [frame.map(x0, ly - slope * (lx - x0)), frame.map(lx, ly)];
                polyline(&mut svg, &pts, "#555555", true);
            }
        }
    }
    for (i, line) in lines.iter().enumerate() {
        let pts: Vec<(f64, f64)> = line.iter().map(|&(x, y)| frame.map(x, y)).collect();
        polyline(&mut svg, &pts, COLORS[i % COLORS.len()], false);
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TimeSeriesRow;

    fn series() -> TimeSeries {
        TimeSeries {
            track_k: 2,
            rows: (0..20)
                .map(|i| {
                    let n = 100 * (i + 1);
                    TimeSeriesRow { n, e: 3 * n, top: vec![n, n / 2] }
                })
                .collect(),
        }
    }

    #[test]
    fn ratio_plot_has_one_line_per_rank_plus_references() {
        let svg = render_svg(&series(), PlotKind::Ratio, &[1.0, 0.5], "a < b");
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 4);
        assert!(svg.contains("a &lt; b"));
    }

    #[test]
    fn loglog_plot_with_slope() {
        let svg = render_svg(&series(), PlotKind::LogLog, &[1.0], "t");
        assert_eq!(svg.matches("<polyline").count(), 2);
        let empty = TimeSeries { track_k: 1, rows: vec![] };
        assert!(render_svg(&empty, PlotKind::LogLog, &[], "t").contains("</svg>"));
    }
}
