//! Trajectory CSV, metrics JSON and SVG plot.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::embodied_box::extents_unchecked;
use crate::geometry::{embodied_corners, footprint_corners, Point2};
use crate::kinematics::{propagate_arc, TimedState};
use crate::trajectory_nlp::Mode;

use super::pipeline::RunMetrics;
use super::scenario::Scenario;

pub const CSV_HEADER: &str = "t,x,y,theta,v,phi";
/// Footprints drawn per interval for the swept outline.
const SVG_SWEEP_SAMPLES: usize = 12;
/// Pixels per meter.
const SVG_SCALE: f64 = 20.0;

/// `v` rounded to 9 significant digits, printed in its shortest form.
pub fn format_sig(v: f64) -> String {
    let rounded: f64 = format!("{v:.8e}").parse().unwrap_or(v);
    if rounded == 0.0 {
        "0".to_string()
    } else {
        rounded.to_string()
    }
}

pub fn trajectory_csv(traj: &[TimedState]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for ts in traj {
        let s = &ts.state;
        let row = [ts.t, s.x, s.y, s.theta, s.v, s.phi].map(format_sig).join(",");
        out.push_str(&row);
        out.push('\n');
    }
    out
}

pub fn parse_trajectory_csv(text: &str) -> io::Result<Vec<TimedState>> {
    let bad = |line: usize, msg: String| io::Error::new(io::ErrorKind::InvalidData, format!("line {line}: {msg}"));
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        other => return Err(bad(1, format!("expected header `{CSV_HEADER}`, found {:?}", other.map(|(_, h)| h)))),
    }
    let mut traj = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| bad(i + 1, e.to_string()))?;
        if vals.len() != 6 {
            return Err(bad(i + 1, format!("expected 6 fields, found {}", vals.len())));
        }
        traj.push(TimedState::new(
            vals[0],
            crate::kinematics::State::new(vals[1], vals[2], vals[3], vals[4], vals[5]),
        ));
    }
    Ok(traj)
}

pub fn metrics_json(metrics: &RunMetrics) -> String {
    let mut s = serde_json::to_string_pretty(metrics).expect("metrics serialize");
    s.push('\n');
    s
}

struct Canvas {
    x_min: f64,
    y_max: f64,
}

impl Canvas {
    fn pt(&self, p: Point2) -> String {
        format!("{:.2},{:.2}", (p.x - self.x_min) * SVG_SCALE, (self.y_max - p.y) * SVG_SCALE)
    }

    fn closed_path(&self, pts: &[Point2]) -> String {
        let mut d = String::new();
        for (i, p) in pts.iter().enumerate() {
            let _ = write!(d, "{}{} ", if i == 0 { "M" } else { "L" }, self.pt(*p));
        }
        d.push('Z');
        d
    }
}

/// Workspace, obstacles, dense swept footprints, embodied boxes (embodied
/// mode only) and the rear-axle path.
pub fn render_svg(scenario: &Scenario, traj: &[TimedState], mode: Mode) -> String {
    let ws = &scenario.workspace;
    let p = &scenario.vehicle;
    let c = Canvas { x_min: ws.x_min, y_max: ws.y_max };
    let (w, h) = (ws.width() * SVG_SCALE, ws.height() * SVG_SCALE);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.2} {h:.2}">"#
    );
    let _ = writeln!(svg, r##"<rect x="0" y="0" width="{w:.2}" height="{h:.2}" fill="#ffffff" stroke="#000000" stroke-width="2"/>"##);
    let _ = writeln!(svg, r#"<g id="obstacles">"#);
    for o in &scenario.obstacles {
        let _ = writeln!(svg, r##"<path d="{}" fill="#555555" stroke="#222222"/>"##, c.closed_path(o.vertices()));
    }
    let _ = writeln!(svg, "</g>");

    let _ = writeln!(svg, r##"<g id="swept" fill="none" stroke="#1f77b4" stroke-opacity="0.35" stroke-width="0.8">"##);
    for w in traj.windows(2) {
        let dt = w[1].t - w[0].t;
        for k in 0..SVG_SWEEP_SAMPLES {
            let s = propagate_arc(w[0].state, dt * k as f64 / SVG_SWEEP_SAMPLES as f64, p.wheelbase);
            let _ = writeln!(svg, r#"<path d="{}"/>"#, c.closed_path(&footprint_corners(s.pose(), p)));
        }
    }
    if let Some(last) = traj.last() {
        let _ = writeln!(svg, r#"<path d="{}"/>"#, c.closed_path(&footprint_corners(last.state.pose(), p)));
    }
    let _ = writeln!(svg, "</g>");

    if mode == Mode::Embodied {
        let _ = writeln!(svg, r##"<g id="embodied-boxes" fill="none" stroke="#d62728" stroke-width="1.2">"##);
        for w in traj.windows(2) {
            let s = &w[0].state;
            let ext = extents_unchecked(s.curvature(p), s.v * (w[1].t - w[0].t), p);
            let _ = writeln!(svg, r#"<path d="{}"/>"#, c.closed_path(&embodied_corners(s.pose(), p, &ext)));
        }
        let _ = writeln!(svg, "</g>");
    }

    let mut path = String::new();
    for (i, w) in traj.windows(2).enumerate() {
        let dt = w[1].t - w[0].t;
        for k in 0..SVG_SWEEP_SAMPLES {
            let s = propagate_arc(w[0].state, dt * k as f64 / SVG_SWEEP_SAMPLES as f64, p.wheelbase);
            let _ = write!(path, "{}{} ", if i == 0 && k == 0 { "M" } else { "L" }, c.pt(s.pose().position()));
        }
    }
    if let Some(last) = traj.last() {
        let _ = write!(path, "{}{}", if traj.len() == 1 { "M" } else { "L" }, c.pt(last.state.pose().position()));
    }
    let _ = writeln!(svg, r##"<path id="rear-axle" d="{}" fill="none" stroke="#000000" stroke-width="1.5"/>"##, path.trim_end());
    svg.push_str("</svg>\n");
    svg
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExportPaths {
    pub trajectory: PathBuf,
    pub metrics: PathBuf,
    pub plot: PathBuf,
}

/// Writes `trajectory.csv`, `metrics.json` and `plot.svg` into `out_dir`,
/// creating it if needed.
pub fn export(
    scenario: &Scenario,
    traj: &[TimedState],
    metrics: &RunMetrics,
    out_dir: impl AsRef<Path>,
) -> io::Result<ExportPaths> {
    let dir = out_dir.as_ref();
    fs::create_dir_all(dir)?;
    let paths = ExportPaths {
        trajectory: dir.join("trajectory.csv"),
        metrics: dir.join("metrics.json"),
        plot: dir.join("plot.svg"),
    };
    fs::write(&paths.trajectory, trajectory_csv(traj))?;
    fs::write(&paths.metrics, metrics_json(metrics))?;
    fs::write(&paths.plot, render_svg(scenario, traj, metrics.mode))?;
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::State;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(format_sig(7.289947123456), "7.28994712");
        assert_eq!(format_sig(-0.0), "0");
        assert_eq!(format_sig(1234567891234.0), "1234567890000");
        assert_eq!(format_sig(1.5e-7), "0.00000015");
        assert_eq!(format_sig(2.0), "2");
    }

    #[test]
    fn csv_round_trip() {
        let traj: Vec<TimedState> = (0..=10)
            .map(|k| TimedState::new(0.3 * k as f64, State::new(k as f64 / 3.0, 1.0, 0.1, 2.0, -0.05)))
            .collect();
        let text = trajectory_csv(&traj);
        assert_eq!(text.lines().count(), 12);
        let back = parse_trajectory_csv(&text).unwrap();
        assert_eq!(back.len(), 11);
        for (a, b) in traj.iter().zip(&back) {
            assert!((a.t - b.t).abs() <= 1e-8 * a.t.abs().max(1.0));
            assert!((a.state.x - b.state.x).abs() <= 1e-8 * a.state.x.abs().max(1.0));
        }
        assert_eq!(trajectory_csv(&back), text);
    }

    #[test]
    fn csv_rejects_bad_input() {
        assert!(parse_trajectory_csv("t,x\n").is_err());
        assert!(parse_trajectory_csv("t,x,y,theta,v,phi\n1,2,3\n").is_err());
        assert!(parse_trajectory_csv("t,x,y,theta,v,phi\n1,2,3,a,5,6\n").is_err());
    }
}
