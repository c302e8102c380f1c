//! Two-column plot data and a minimal SVG line plot from result CSVs.

use std::fmt::Write as _;

use crate::moments::growth_fit;
use crate::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PlotData {
    pub x_label: String,
    pub y_label: String,
    pub loglog: bool,
    pub points: Vec<(f64, f64)>,
    /// Least-squares slope (of `log y` on `log x` in log-log mode).
    pub slope: Option<f64>,
}

/// Extracts columns `x` and `y` from CSV text.
pub fn emit_plot_data(csv_text: &str, x: &str, y: &str, loglog: bool) -> Result<PlotData> {
    let mut rdr = csv::Reader::from_reader(csv_text.as_bytes());
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let (ix, iy) = (col(x)?, col(y)?);
    let mut points = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let parse = |i: usize| {
            let field = rec.get(i).unwrap_or("");
            field
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("non-numeric value {field:?}")))
        };
        let (px, py) = (parse(ix)?, parse(iy)?);
        if loglog {
            for v in [px, py] {
                if !(v > 0.0) {
                    return Err(Error::NonPositive(v));
                }
            }
        }
        points.push((px, py));
    }
    if points.is_empty() {
        return Err(Error::Empty("CSV has no data rows".into()));
    }
    let slope = fit_slope(&points, loglog);
    Ok(PlotData {
        x_label: x.to_string(),
        y_label: y.to_string(),
        loglog,
        points,
        slope,
    })
}

fn fit_slope(points: &[(f64, f64)], loglog: bool) -> Option<f64> {
    if loglog {
        return growth_fit(points).ok().map(|f| f.slope);
    }
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl PlotData {
    fn slope_label(&self) -> String {
        self.slope.map_or("NA".to_string(), |s| format!("{s:.6}"))
    }

    /// Header comment plus one `x y` line per row, gnuplot-ready.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# x={} y={} scale={} slope={}\n",
            self.x_label,
            self.y_label,
            if self.loglog { "loglog" } else { "linear" },
            self.slope_label()
        );
        for (x, y) in &self.points {
            let _ = writeln!(out, "{x} {y}");
        }
        out
    }

    /// A single polyline with axes, axis labels and the slope annotation.
    pub fn to_svg(&self) -> String {
        let tr = |v: f64| if self.loglog { v.ln() } else { v };
        let xs: Vec<f64> = self.points.iter().map(|p| tr(p.0)).collect();
        let ys: Vec<f64> = self.points.iter().map(|p| tr(p.1)).collect();
        let span = |v: &[f64]| {
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if hi > lo {
                (lo, hi)
            } else {
                (lo - 0.5, lo + 0.5)
            }
        };
        let (x0, x1) = span(&xs);
        let (y0, y1) = span(&ys);
        let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
        let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
        let coords: Vec<String> = xs
            .iter()
            .zip(&ys)
            .map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let prefix = if self.loglog { "log " } else { "" };
        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
        );
        let _ = writeln!(
            svg,
            r#"<line x1="{MARGIN}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/>"#,
            b = HEIGHT - MARGIN,
            r = WIDTH - MARGIN
        );
        let _ = writeln!(
            svg,
            r#"<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{b}" stroke="black"/>"#,
            b = HEIGHT - MARGIN
        );
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="steelblue" stroke-width="2" points="{}"/>"#,
            coords.join(" ")
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">{prefix}{}</text>"#,
            WIDTH / 2.0,
            HEIGHT - MARGIN / 3.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{x}" y="{y}" text-anchor="middle" transform="rotate(-90 {x} {y})">{prefix}{}</text>"#,
            escape(&self.y_label),
            x = MARGIN / 3.0,
            y = HEIGHT / 2.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="end">slope={}</text>"#,
            WIDTH - MARGIN,
            MARGIN / 2.0,
            self.slope_label()
        );
        svg.push_str("</svg>\n");
        svg
    }
}
