//! Static SVG charts from a run log. Output depends only on the input text,
//! so identical logs give byte-identical files.

use clap::ValueEnum;
use driftsim::sim::ObstacleSpec;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum PlotKind {
    Trajectory,
    TrackingError,
    Altitude,
    Thrust,
    Wind,
    RcVc,
}

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("log is missing column `{0}`")]
    MissingColumn(String),
    #[error("log has no data rows")]
    EmptyLog,
    #[error("row {row}: column `{column}` is not a number")]
    BadValue { row: usize, column: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

const WIDTH: f64 = 800.0;
const PANEL_H: f64 = 420.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

struct Series {
    label: String,
    color: usize,
    dashed: bool,
    points: Vec<(f64, f64)>,
}

struct Panel {
    title: String,
    x_label: &'static str,
    y_label: &'static str,
    equal_aspect: bool,
    series: Vec<Series>,
}

/// Log columns addressed by name, rows grouped per vehicle in file order.
struct Table {
    index: BTreeMap<String, usize>,
    rows: Vec<csv::StringRecord>,
    by_vehicle: BTreeMap<u32, Vec<usize>>,
}

impl Table {
    fn parse(text: &str) -> Result<Self, PlotError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let index: BTreeMap<String, usize> =
            rdr.headers()?.iter().enumerate().map(|(i, h)| (h.trim().to_string(), i)).collect();
        let rows = rdr.records().collect::<Result<Vec<_>, _>>()?;
        let mut t = Table { index, rows, by_vehicle: BTreeMap::new() };
        if t.rows.is_empty() {
            return Err(PlotError::EmptyLog);
        }
        let id = t.col("id")?;
        for (k, r) in t.rows.iter().enumerate() {
            let v = r.get(id).and_then(|s| s.parse().ok()).ok_or(PlotError::BadValue { row: k + 1, column: "id".into() })?;
            t.by_vehicle.entry(v).or_default().push(k);
        }
        Ok(t)
    }

    fn col(&self, name: &str) -> Result<usize, PlotError> {
        self.index.get(name).copied().ok_or_else(|| PlotError::MissingColumn(name.to_string()))
    }

    fn require(&self, names: &[&str]) -> Result<(), PlotError> {
        names.iter().try_for_each(|n| self.col(n).map(|_| ()))
    }

    fn value(&self, row: usize, name: &str) -> Result<f64, PlotError> {
        let c = self.col(name)?;
        let s = self.rows[row].get(c).unwrap_or("");
        match s {
            "inf" => Ok(f64::INFINITY),
            _ => s.parse().map_err(|_| PlotError::BadValue { row: row + 1, column: name.to_string() }),
        }
    }

    /// One series per vehicle of `f(row)` against time.
    fn per_vehicle(
        &self,
        suffix: &str,
        dashed: bool,
        f: impl Fn(&Self, usize) -> Result<f64, PlotError>,
    ) -> Result<Vec<Series>, PlotError> {
        self.by_vehicle
            .iter()
            .enumerate()
            .map(|(i, (id, rows))| {
                let points = rows.iter().map(|&r| Ok((self.value(r, "t")?, f(self, r)?))).collect::<Result<_, PlotError>>()?;
                Ok(Series { label: format!("vehicle {id}{suffix}"), color: i, dashed, points })
            })
            .collect()
    }
}

fn required(kind: PlotKind) -> &'static [&'static str] {
    match kind {
        PlotKind::Trajectory => &["t", "id", "px", "py"],
        PlotKind::TrackingError => &["t", "id", "px", "py", "pz", "pdx", "pdy", "pdz"],
        PlotKind::Altitude => &["t", "id", "pz"],
        PlotKind::Thrust => &["t", "id", "f_cmd"],
        PlotKind::Wind => &["t", "id", "wx", "wy", "vairx", "vairy"],
        PlotKind::RcVc => &["t", "id", "r_c", "v_c"],
    }
}

/// Render `kind` from the CSV text of a run log. Obstacles, when given, are
/// drawn under the trajectory plot.
pub fn render(csv_text: &str, kind: PlotKind, obstacles: &[ObstacleSpec]) -> Result<String, PlotError> {
    let table = Table::parse(csv_text)?;
    table.require(required(kind))?;
    let panel = |title: &str, y_label: &'static str, series| Panel {
        title: title.to_string(),
        x_label: "t [s]",
        y_label,
        equal_aspect: false,
        series,
    };
    let panels = match kind {
        PlotKind::Trajectory => {
            let series = table
                .by_vehicle
                .iter()
                .enumerate()
                .map(|(i, (id, rows))| {
                    let points = rows
                        .iter()
                        .map(|&r| Ok((table.value(r, "px")?, table.value(r, "py")?)))
                        .collect::<Result<_, PlotError>>()?;
                    Ok(Series { label: format!("vehicle {id}"), color: i, dashed: false, points })
                })
                .collect::<Result<Vec<_>, PlotError>>()?;
            vec![Panel { title: "Planar trajectories".into(), x_label: "x [m]", y_label: "y [m]", equal_aspect: true, series }]
        }
        PlotKind::TrackingError => {
            let s = table.per_vehicle("", false, |t, r| {
                let d = [("px", "pdx"), ("py", "pdy"), ("pz", "pdz")]
                    .iter()
                    .map(|(a, b)| Ok((t.value(r, a)? - t.value(r, b)?).powi(2)))
                    .sum::<Result<f64, PlotError>>()?;
                Ok(d.sqrt())
            })?;
            vec![panel("Tracking error |p - p_d|", "error [m]", s)]
        }
        PlotKind::Altitude => vec![panel("Altitude", "z [m]", table.per_vehicle("", false, |t, r| t.value(r, "pz"))?)],
        PlotKind::Thrust => vec![panel("Commanded thrust", "f_cmd [N]", table.per_vehicle("", false, |t, r| t.value(r, "f_cmd"))?)],
        PlotKind::Wind => {
            let mut s = table.per_vehicle(" wind", false, |t, r| Ok(t.value(r, "wx")?.hypot(t.value(r, "wy")?)))?;
            s.extend(table.per_vehicle(" estimate", true, |t, r| Ok(t.value(r, "vairx")?.hypot(t.value(r, "vairy")?)))?);
            vec![panel("Wind speed and estimate", "speed [m/s]", s)]
        }
        PlotKind::RcVc => vec![
            panel("Clearance radius", "r_c [m]", table.per_vehicle("", false, |t, r| t.value(r, "r_c"))?),
            panel("Cruise velocity", "v_c [m/s]", table.per_vehicle("", false, |t, r| t.value(r, "v_c"))?),
        ],
    };
    let obstacles = if kind == PlotKind::Trajectory { obstacles } else { &[] };
    Ok(svg(&panels, obstacles))
}

fn nice_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let m = if f < 1.5 {
        1.0
    } else if f < 3.5 {
        2.0
    } else if f < 7.5 {
        5.0
    } else {
        10.0
    };
    m * mag
}

/// Padded data range with a tick step.
fn axis(values: impl Iterator<Item = f64>) -> (f64, f64, f64) {
    let (mut lo, mut hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-9 {
        lo -= 1.0;
        hi += 1.0;
    }
    let step = nice_step(hi - lo);
    ((lo / step).floor() * step, (hi / step).ceil() * step, step)
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    left: f64,
    top: f64,
    w: f64,
    h: f64,
}

impl Frame {
    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        (self.left + (x - self.x0) / (self.x1 - self.x0) * self.w, self.top + (self.y1 - y) / (self.y1 - self.y0) * self.h)
    }
}

fn obstacle_outline(o: &ObstacleSpec) -> Vec<(f64, f64)> {
    match o {
        ObstacleSpec::Disc { center, radius, .. } => (0..48)
            .map(|i| {
                let a = i as f64 * std::f64::consts::TAU / 48.0;
                (center.x + radius * a.cos(), center.y + radius * a.sin())
            })
            .collect(),
        ObstacleSpec::Polygon { vertices, .. } => vertices.iter().map(|v| (v.x, v.y)).collect(),
    }
}

fn svg(panels: &[Panel], obstacles: &[ObstacleSpec]) -> String {
    let height = PANEL_H * panels.len() as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (pi, p) in panels.iter().enumerate() {
        let outlines: Vec<Vec<(f64, f64)>> = obstacles.iter().map(obstacle_outline).collect();
        let xs = p.series.iter().flat_map(|s| s.points.iter().map(|q| q.0));
        let ys = p.series.iter().flat_map(|s| s.points.iter().map(|q| q.1));
        let (mut x0, mut x1, mut xs_step) = axis(xs);
        let (mut y0, mut y1, mut ys_step) = axis(ys);
        let mut f = Frame {
            x0,
            x1,
            y0,
            y1,
            left: MARGIN_L,
            top: pi as f64 * PANEL_H + MARGIN_T,
            w: WIDTH - MARGIN_L - MARGIN_R,
            h: PANEL_H - MARGIN_T - MARGIN_B,
        };
        if p.equal_aspect {
            // widen the shorter extent so one metre is the same length on both axes
            let scale = ((x1 - x0) / f.w).max((y1 - y0) / f.h);
            let (cx, cy) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
            (x0, x1) = (cx - 0.5 * scale * f.w, cx + 0.5 * scale * f.w);
            (y0, y1) = (cy - 0.5 * scale * f.h, cy + 0.5 * scale * f.h);
            xs_step = nice_step(x1 - x0);
            ys_step = nice_step(y1 - y0);
            (f.x0, f.x1, f.y0, f.y1) = (x0, x1, y0, y1);
        }
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" font-size="14" text-anchor="middle">{}</text>"#, f.left + f.w / 2.0, f.top - 15.0, p.title);
        let _ = writeln!(out, r##"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="#444"/>"##, f.left, f.top, f.w, f.h);
        let mut tick = (x0 / xs_step).ceil() * xs_step;
        while tick <= x1 + 1e-9 {
            let (sx, _) = f.map(tick, y0);
            let _ = writeln!(out, r##"<line x1="{sx:.1}" y1="{:.1}" x2="{sx:.1}" y2="{:.1}" stroke="#ddd"/>"##, f.top, f.top + f.h);
            let _ = writeln!(out, r#"<text x="{sx:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, f.top + f.h + 16.0, label(tick));
            tick += xs_step;
        }
        let mut tick = (y0 / ys_step).ceil() * ys_step;
        while tick <= y1 + 1e-9 {
            let (_, sy) = f.map(x0, tick);
            let _ = writeln!(out, r##"<line x1="{:.1}" y1="{sy:.1}" x2="{:.1}" y2="{sy:.1}" stroke="#ddd"/>"##, f.left, f.left + f.w);
            let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, f.left - 6.0, sy + 4.0, label(tick));
            tick += ys_step;
        }
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, f.left + f.w / 2.0, f.top + f.h + 36.0, p.x_label);
        let (lx, ly) = (18.0, f.top + f.h / 2.0);
        let _ = writeln!(out, r#"<text x="{lx:.1}" y="{ly:.1}" text-anchor="middle" transform="rotate(-90 {lx:.1} {ly:.1})">{}</text>"#, p.y_label);
        let _ = writeln!(out, r#"<clipPath id="clip{pi}"><rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}"/></clipPath>"#, f.left, f.top, f.w, f.h);
        let _ = writeln!(out, r#"<g clip-path="url(#clip{pi})">"#);
        for o in &outlines {
            let pts: Vec<String> = o.iter().map(|&(x, y)| f.map(x, y)).map(|(a, b)| format!("{a:.1},{b:.1}")).collect();
            let _ = writeln!(out, r##"<polygon points="{}" fill="#bbb" stroke="#777"/>"##, pts.join(" "));
        }
        for s in &p.series {
            polyline(&mut out, &f, s);
        }
        let _ = writeln!(out, "</g>");
        for (k, s) in p.series.iter().enumerate() {
            let y = f.top + 10.0 + 18.0 * k as f64;
            let x = f.left + f.w + 12.0;
            let dash = if s.dashed { r#" stroke-dasharray="5,3""# } else { "" };
            let _ = writeln!(
                out,
                r#"<line x1="{x:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="{}" stroke-width="2"{dash}/><text x="{:.1}" y="{:.1}">{}</text>"#,
                x + 24.0,
                PALETTE[s.color % PALETTE.len()],
                x + 30.0,
                y + 4.0,
                s.label
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Polyline with breaks at non-finite samples.
fn polyline(out: &mut String, f: &Frame, s: &Series) {
    let dash = if s.dashed { r#" stroke-dasharray="5,3""# } else { "" };
    let color = PALETTE[s.color % PALETTE.len()];
    for run in s.points.split(|p| !p.0.is_finite() || !p.1.is_finite()) {
        if run.is_empty() {
            continue;
        }
        let pts: Vec<String> = run.iter().map(|&(x, y)| f.map(x, y)).map(|(a, b)| format!("{a:.1},{b:.1}")).collect();
        let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#, pts.join(" "));
    }
}

fn label(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nice_steps() {
        assert_eq!(nice_step(10.0), 2.0);
        assert_eq!(nice_step(1.0), 0.2);
        assert_eq!(nice_step(60.0), 10.0);
    }

    #[test]
    fn axis_pads_to_ticks_and_handles_flat_data() {
        assert_eq!(axis([0.3, 9.7].into_iter()), (0.0, 10.0, 2.0));
        let (lo, hi, _) = axis([5.0, 5.0].into_iter());
        assert!(lo < 5.0 && hi > 5.0);
        assert_eq!(axis(std::iter::empty()), (0.0, 1.0, 0.2));
    }

    #[test]
    fn labels_are_compact() {
        assert_eq!(label(2.0), "2");
        assert_eq!(label(0.25), "0.25");
        assert_eq!(label(-0.0), "0");
    }
}
