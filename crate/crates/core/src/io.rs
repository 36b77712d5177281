//! On-disk formats: trajectory CSV/JSON, run summaries, manifests, SVG plots.
//!
//! Trajectory CSV has the header `index,r,z` and one vertex per row written
//! with 17 significant digits. Closed curves do not repeat their first vertex;
//! closure is recorded in the summary.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::convergence::ConvergenceReport;
use crate::metric::Point;
use crate::solver::SolveConfig;
use crate::trajectory::Trajectory;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("malformed trajectory file: {0}")]
    Malformed(String),
}

#[derive(Debug, Serialize, Deserialize)]
struct VertexRow {
    index: usize,
    r: f64,
    z: f64,
}

fn full_precision(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_trajectory_csv<W: Write>(out: W, traj: &Trajectory) -> Result<(), FormatError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["index", "r", "z"])?;
    for (k, p) in traj.points.iter().enumerate() {
        w.write_record([k.to_string(), full_precision(p.r), full_precision(p.z)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectory_csv<R: Read>(input: R, closed: bool) -> Result<Trajectory, FormatError> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["index", "r", "z"] {
        return Err(FormatError::Malformed(format!(
            "unexpected header {headers:?}"
        )));
    }
    let mut points = Vec::new();
    for (expected, row) in rdr.deserialize::<VertexRow>().enumerate() {
        let row = row?;
        if row.index != expected {
            return Err(FormatError::Malformed(format!(
                "row {expected} has index {}",
                row.index
            )));
        }
        points.push(Point::new(row.r, row.z));
    }
    Ok(Trajectory::new(points, closed))
}

pub fn write_trajectory_json<W: Write>(out: W, traj: &Trajectory) -> Result<(), FormatError> {
    serde_json::to_writer_pretty(out, traj)?;
    Ok(())
}

pub fn read_trajectory_json<R: Read>(input: R) -> Result<Trajectory, FormatError> {
    Ok(serde_json::from_reader(input)?)
}

/// Flat per-run result document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub shape: String,
    pub n_points: usize,
    pub closed: bool,
    pub tau: f64,
    pub entropy: f64,
    pub converged: bool,
    pub iterations: usize,
    pub residual_norm: f64,
    pub intercepts: Vec<f64>,
    pub max_z_point: Option<Point>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub point_counts: Vec<usize>,
    pub slope: Option<f64>,
    pub extrapolated_entropy: Option<f64>,
    pub model_exponent: Option<f64>,
    pub non_monotone: bool,
}

impl From<&ConvergenceReport> for FitSummary {
    fn from(r: &ConvergenceReport) -> Self {
        Self {
            point_counts: r.point_counts.clone(),
            slope: r.fitted_order,
            extrapolated_entropy: r.extrapolated_entropy,
            model_exponent: r.model_exponent,
            non_monotone: r.non_monotone,
        }
    }
}

/// Record of one CLI invocation and every file it produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub timestamp: String,
    pub solver_config: SolveConfig,
    pub results: BTreeMap<String, serde_json::Value>,
    pub outputs: Vec<String>,
}

pub fn write_json<W: Write, T: Serialize>(out: W, value: &T) -> Result<(), FormatError> {
    let mut out = out;
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

/// `N,entropy,error_estimate`; the error column is empty when no
/// extrapolation was possible.
pub fn write_convergence_csv<W: Write>(
    out: W,
    report: &ConvergenceReport,
) -> Result<(), FormatError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["N", "entropy", "error_estimate"])?;
    for (k, (&n, &e)) in report
        .point_counts
        .iter()
        .zip(&report.entropies)
        .enumerate()
    {
        let err = report
            .per_level_error_estimates
            .get(k)
            .map(|&v| full_precision(v))
            .unwrap_or_default();
        w.write_record([n.to_string(), full_precision(e), err])?;
    }
    w.flush()?;
    Ok(())
}

/// Read back `(N, entropy)` pairs from a convergence CSV.
pub fn read_convergence_csv<R: Read>(input: R) -> Result<Vec<(usize, f64)>, FormatError> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let parse_err = |what: &str| FormatError::Malformed(format!("bad {what} in {record:?}"));
        let n = record
            .get(0)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err("N"))?;
        let e = record
            .get(1)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err("entropy"))?;
        rows.push((n, e));
    }
    Ok(rows)
}

const SVG_SIZE: f64 = 640.0;
const SVG_MARGIN: f64 = 40.0;

/// One polyline (closed curves as `<polygon>`) with `r` to the right and `z`
/// up, at equal aspect ratio.
pub fn trajectory_svg(traj: &Trajectory) -> String {
    let pts = &traj.points;
    let (mut r_min, mut r_max, mut z_min, mut z_max) = (0.0f64, 1.0f64, -0.5f64, 0.5f64);
    for p in pts {
        r_min = r_min.min(p.r);
        r_max = r_max.max(p.r);
        z_min = z_min.min(p.z);
        z_max = z_max.max(p.z);
    }
    let span = (r_max - r_min).max(z_max - z_min);
    let scale = (SVG_SIZE - 2.0 * SVG_MARGIN) / span;
    let width = (r_max - r_min) * scale + 2.0 * SVG_MARGIN;
    let height = (z_max - z_min) * scale + 2.0 * SVG_MARGIN;
    let x = |r: f64| SVG_MARGIN + (r - r_min) * scale;
    let y = |z: f64| SVG_MARGIN + (z_max - z) * scale;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.1}" height="{height:.1}" viewBox="0 0 {width:.1} {height:.1}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r##"<line class="axis" x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="#888" stroke-width="1"/>"##,
        x(r_min),
        y(0.0),
        x(r_max),
        y(0.0)
    );
    let _ = writeln!(
        s,
        r##"<line class="axis" x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="#888" stroke-width="1"/>"##,
        x(0.0),
        y(z_min),
        x(0.0),
        y(z_max)
    );
    let coords: Vec<String> = pts
        .iter()
        .map(|p| format!("{:.3},{:.3}", x(p.r), y(p.z)))
        .collect();
    let tag = if traj.closed { "polygon" } else { "polyline" };
    let _ = writeln!(
        s,
        r#"<{tag} points="{}" fill="none" stroke="black" stroke-width="1.5"/>"#,
        coords.join(" ")
    );
    s.push_str("</svg>\n");
    s
}

/// Log-log plot of the per-level error estimates against `N`.
pub fn convergence_svg(report: &ConvergenceReport) -> String {
    let data: Vec<(f64, f64)> = report
        .point_counts
        .iter()
        .zip(&report.per_level_error_estimates)
        .filter(|(_, e)| e.abs() > 0.0)
        .map(|(&n, e)| ((n as f64).log10(), e.abs().log10()))
        .collect();
    let mut s = String::new();
    let size = SVG_SIZE;
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if data.len() >= 2 {
        let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for &(x, y) in &data {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        let inner = size - 2.0 * SVG_MARGIN;
        let px = |x: f64| SVG_MARGIN + (x - x0) / (x1 - x0).max(1e-12) * inner;
        let py = |y: f64| SVG_MARGIN + (y1 - y) / (y1 - y0).max(1e-12) * inner;
        let coords: Vec<String> = data
            .iter()
            .map(|&(x, y)| format!("{:.3},{:.3}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            s,
            r##"<polyline points="{}" fill="none" stroke="#333" stroke-width="1"/>"##,
            coords.join(" ")
        );
        for &(x, y) in &data {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.3}" cy="{:.3}" r="4" fill="black"/>"#,
                px(x),
                py(y)
            );
        }
        if let Some(slope) = report.fitted_order {
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="14">slope {slope:.4}</text>"#,
                SVG_MARGIN,
                SVG_MARGIN / 2.0
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn csv_round_trip_is_lossless(
            coords in prop::collection::vec((0.0f64..10.0, -10.0f64..10.0), 1..40),
            closed in any::<bool>(),
        ) {
            let traj = Trajectory::new(coords.iter().map(|&(r, z)| Point::new(r, z)).collect(), closed);
            let mut buf = Vec::new();
            write_trajectory_csv(&mut buf, &traj).unwrap();
            let back = read_trajectory_csv(buf.as_slice(), closed).unwrap();
            prop_assert_eq!(back, traj);
        }
    }

    #[test]
    fn csv_header_and_layout() {
        let traj = Trajectory::closed(vec![
            Point::new(1.0, 0.5),
            Point::new(2.0, -0.25),
            Point::new(0.1, 0.0),
        ]);
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &traj).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "index,r,z");
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1], "0,1.0000000000000000e0,5.0000000000000000e-1");
    }

    #[test]
    fn rejects_bad_header() {
        let err = read_trajectory_csv("i,x,y\n0,1,2\n".as_bytes(), false);
        assert!(matches!(err, Err(FormatError::Malformed(_))));
    }

    #[test]
    fn svg_vertex_count() {
        let traj = Trajectory::closed(
            (0..12)
                .map(|k| Point::new(2.0 + (k as f64).cos(), (k as f64).sin()))
                .collect(),
        );
        let svg = trajectory_svg(&traj);
        assert_eq!(svg.matches("<polygon").count(), 1);
        let start = svg.find("points=\"").unwrap() + 8;
        let end = start + svg[start..].find('"').unwrap();
        assert_eq!(svg[start..end].split_whitespace().count(), 12);
    }

    #[test]
    fn json_round_trip() {
        let traj = Trajectory::open(vec![Point::new(0.0, -2.0), Point::new(0.3, 0.1)]);
        let mut buf = Vec::new();
        write_trajectory_json(&mut buf, &traj).unwrap();
        assert_eq!(read_trajectory_json(buf.as_slice()).unwrap(), traj);
    }
}
