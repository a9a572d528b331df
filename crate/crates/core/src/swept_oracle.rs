//! Brute-force ground truth for continuous-time motion: dense sampling of the
//! footprint between collocation points.

use serde::{Deserialize, Serialize};

use crate::embodied_box::sweep_bounds_unchecked;
use crate::error::OracleError;
use crate::geometry::{footprint_corners, ring_clearance, rings_overlap, Aabb, ConvexPolygon, Point2, VehicleParams};
use crate::kinematics::{propagate_arc, vertex_trajectory, TimedState};

pub const DEFAULT_COVERAGE_SAMPLES: usize = 2000;
pub const DEFAULT_SAFETY_SAMPLES: usize = 200;
pub const MIN_COVERAGE_SAMPLES: usize = 100;
pub const MIN_SAFETY_SAMPLES: usize = 50;

/// Slack on speed and steering bounds when validating trajectories produced
/// by an iterative solver.
pub const STATE_BOUND_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageOptions {
    pub tolerance: f64,
    /// Interior points sampled on each footprint edge in addition to the
    /// corners. Zero samples corners only.
    pub edge_samples: usize,
}

impl Default for CoverageOptions {
    fn default() -> Self {
        Self { tolerance: 1e-9, edge_samples: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub covered: bool,
    /// Largest signed excursion of any sample beyond the sweep bounds.
    pub worst_violation: f64,
    /// Same, restricted to the lateral (x) bounds of the normalized frame.
    pub worst_lateral_violation: f64,
    pub sample_count: usize,
    pub argmax_time: f64,
}

fn sample_time(duration: f64, index: usize, count: usize) -> f64 {
    if index == count {
        duration
    } else {
        duration * index as f64 / count as f64
    }
}

/// Samples the corner trajectories over `[0, dt]` and measures how far they
/// leave the embodied-box sweep bounds. The prerequisites are not required to
/// hold, so the check also demonstrates failures outside the envelope.
pub fn coverage_check(v: f64, kappa: f64, dt: f64, params: &VehicleParams, n_samples: usize) -> CoverageReport {
    coverage_check_with(v, kappa, dt, params, n_samples, CoverageOptions::default())
}

pub fn coverage_check_with(
    v: f64,
    kappa: f64,
    dt: f64,
    params: &VehicleParams,
    n_samples: usize,
    opts: CoverageOptions,
) -> CoverageReport {
    let n = n_samples.max(MIN_COVERAGE_SAMPLES);
    let b = sweep_bounds_unchecked(kappa, v * dt, params);
    let mut worst = f64::NEG_INFINITY;
    let mut worst_lateral = f64::NEG_INFINITY;
    let mut argmax_time = 0.0;
    let mut points = Vec::with_capacity(4 * (1 + opts.edge_samples));
    for i in 0..=n {
        let t = sample_time(dt, i, n);
        let corners = vertex_trajectory(v, kappa, t, params);
        points.clear();
        points.extend_from_slice(&corners);
        for e in 0..4 {
            let (a, c) = (corners[e], corners[(e + 1) % 4]);
            for j in 1..=opts.edge_samples {
                let f = j as f64 / (opts.edge_samples + 1) as f64;
                points.push(a + (c - a) * f);
            }
        }
        for p in &points {
            let lateral = (b.x_min - p.x).max(p.x - b.x_max);
            let excursion = lateral.max(b.y_min - p.y).max(p.y - b.y_max);
            worst_lateral = worst_lateral.max(lateral);
            if excursion > worst {
                worst = excursion;
                argmax_time = t;
            }
        }
    }
    CoverageReport {
        covered: worst <= opts.tolerance,
        worst_violation: worst,
        worst_lateral_violation: worst_lateral,
        sample_count: n + 1,
        argmax_time,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafetyReport {
    pub safe: bool,
    pub first_violation_time: Option<f64>,
    /// Smallest footprint-to-obstacle distance over all samples; infinite with
    /// no obstacles.
    pub min_clearance: f64,
    pub samples_per_interval: usize,
}

fn validate_trajectory(traj: &[TimedState], params: &VehicleParams) -> Result<(), OracleError> {
    let malformed = |index: usize, reason: String| OracleError::MalformedTrajectory { index, reason };
    if traj.is_empty() {
        return Err(malformed(0, "trajectory is empty".into()));
    }
    for (i, ts) in traj.iter().enumerate() {
        if !ts.t.is_finite() || !ts.state.is_finite() {
            return Err(malformed(i, "non-finite entry".into()));
        }
        if ts.state.v < -STATE_BOUND_TOLERANCE || ts.state.v > params.v_max + STATE_BOUND_TOLERANCE {
            return Err(malformed(i, format!("speed {} outside [0, {}]", ts.state.v, params.v_max)));
        }
        if ts.state.phi.abs() > params.phi_max + STATE_BOUND_TOLERANCE {
            return Err(malformed(i, format!("steering {} exceeds {}", ts.state.phi, params.phi_max)));
        }
        if i > 0 && ts.t <= traj[i - 1].t {
            return Err(malformed(i, format!("time {} does not follow {}", ts.t, traj[i - 1].t)));
        }
    }
    Ok(())
}

struct ObstacleSet<'a> {
    rings: Vec<&'a [Point2]>,
    boxes: Vec<Aabb>,
}

impl<'a> ObstacleSet<'a> {
    fn new(obstacles: &'a [ConvexPolygon]) -> Self {
        Self {
            rings: obstacles.iter().map(|o| o.vertices()).collect(),
            boxes: obstacles.iter().map(|o| o.aabb()).collect(),
        }
    }
}

fn aabb_gap(a: &Aabb, b: &Aabb) -> f64 {
    let dx = (b.min.x - a.max.x).max(a.min.x - b.max.x).max(0.0);
    let dy = (b.min.y - a.max.y).max(a.min.y - b.max.y).max(0.0);
    dx.hypot(dy)
}

/// Overlap and clearance of one footprint sample. With `prefilter`, obstacles
/// whose bounding boxes are farther than the running clearance are skipped;
/// the result is identical either way.
fn probe(ring: &[Point2], obstacles: &ObstacleSet<'_>, best: &mut f64, prefilter: bool) -> bool {
    let fp_box = Aabb::from_points(ring);
    let mut hit = false;
    for (obs, obox) in obstacles.rings.iter().zip(&obstacles.boxes) {
        if prefilter && aabb_gap(&fp_box, obox) > *best {
            continue;
        }
        if rings_overlap(ring, obs) {
            hit = true;
            *best = 0.0;
        } else {
            *best = best.min(ring_clearance(ring, obs));
        }
    }
    hit
}

/// Dense continuous-time collision check of a held-state trajectory.
///
/// Each interval is replayed from its start state with speed and steering
/// held, sampled at `samples_per_interval + 1` uniform instants including both
/// endpoints; the stored final state is checked as well.
pub fn trajectory_safety_check(
    traj: &[TimedState],
    obstacles: &[ConvexPolygon],
    params: &VehicleParams,
    samples_per_interval: usize,
) -> Result<SafetyReport, OracleError> {
    safety_check_impl(traj, obstacles, params, samples_per_interval, true)
}

/// [`trajectory_safety_check`] without bounding-box pre-filtering.
pub fn trajectory_safety_check_unfiltered(
    traj: &[TimedState],
    obstacles: &[ConvexPolygon],
    params: &VehicleParams,
    samples_per_interval: usize,
) -> Result<SafetyReport, OracleError> {
    safety_check_impl(traj, obstacles, params, samples_per_interval, false)
}

fn safety_check_impl(
    traj: &[TimedState],
    obstacles: &[ConvexPolygon],
    params: &VehicleParams,
    samples_per_interval: usize,
    prefilter: bool,
) -> Result<SafetyReport, OracleError> {
    if samples_per_interval < MIN_SAFETY_SAMPLES {
        return Err(OracleError::MalformedTrajectory {
            index: 0,
            reason: format!("samples_per_interval {samples_per_interval} below {MIN_SAFETY_SAMPLES}"),
        });
    }
    validate_trajectory(traj, params)?;
    let set = ObstacleSet::new(obstacles);
    let mut min_clearance = f64::INFINITY;
    let mut first_violation_time = None;
    let mut record = |t: f64, corners: [Point2; 4], best: &mut f64| {
        let ring = [corners[0], corners[3], corners[2], corners[1]];
        if probe(&ring, &set, best, prefilter) && first_violation_time.is_none() {
            first_violation_time = Some(t);
        }
    };
    for pair in traj.windows(2) {
        let (start, end) = (pair[0], pair[1]);
        let dt = end.t - start.t;
        for j in 0..=samples_per_interval {
            let tau = sample_time(dt, j, samples_per_interval);
            let pose = propagate_arc(start.state, tau, params.wheelbase).pose();
            record(start.t + tau, footprint_corners(pose, params), &mut min_clearance);
        }
    }
    let last = traj[traj.len() - 1];
    record(last.t, footprint_corners(last.state.pose(), params), &mut min_clearance);
    Ok(SafetyReport {
        safe: first_violation_time.is_none(),
        first_violation_time,
        min_clearance,
        samples_per_interval,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::State;
    use std::f64::consts::FRAC_PI_2;

    fn car() -> VehicleParams {
        VehicleParams::passenger_car()
    }

    #[test]
    fn straight_sweep_is_exactly_covered() {
        let r = coverage_check(2.0, 0.0, 0.5, &car(), 1000);
        assert!(r.covered);
        assert!(r.worst_violation <= 0.0, "{r:?}");
        assert_eq!(r.sample_count, 1001);
    }

    #[test]
    fn short_turn_is_covered() {
        let r = coverage_check(2.0, 0.1, 0.4, &car(), 10_000);
        assert!(r.covered, "{r:?}");
    }

    #[test]
    fn static_footprint_touches_its_bounds() {
        let r = coverage_check(2.0, 0.2, 0.0, &car(), 200);
        assert!(r.covered);
        assert_eq!(r.worst_violation, 0.0);
    }

    #[test]
    fn coverage_fails_past_a_quarter_turn() {
        // Past a half turn the front corners swing back below the rear bound.
        let k = 0.3;
        let r = coverage_check(5.0, k, 3.5 / (5.0 * k), &car(), 2000);
        assert!(!r.covered);
        assert!(r.worst_violation > 1e-3);
    }

    #[test]
    fn edge_sampling_agrees_with_corners() {
        let opts = CoverageOptions { edge_samples: 5, ..CoverageOptions::default() };
        for (v, k, dt) in [(2.0, 0.1, 0.4), (5.0, -0.25, 0.15), (1.0, 0.0, 1.0)] {
            let corners = coverage_check(v, k, dt, &car(), 500);
            let edges = coverage_check_with(v, k, dt, &car(), 500, opts);
            assert!(edges.covered);
            assert!((edges.worst_violation - corners.worst_violation).abs() < 1e-12);
        }
    }

    fn timed(t: f64, x: f64, y: f64, theta: f64, v: f64, phi: f64) -> TimedState {
        TimedState::new(t, State::new(x, y, theta, v, phi))
    }

    #[test]
    fn no_obstacles_is_safe() {
        let traj = [timed(0.0, 0.0, 0.0, 0.0, 1.0, 0.0), timed(1.0, 1.0, 0.0, 0.0, 1.0, 0.0)];
        let r = trajectory_safety_check(&traj, &[], &car(), 200).unwrap();
        assert!(r.safe);
        assert!(r.min_clearance.is_infinite());
    }

    #[test]
    fn straight_crossing_is_detected() {
        // Moving along +x at 2 m/s from x = 0; the block spans x in [4, 5].
        let block = ConvexPolygon::rectangle(Point2::new(4.0, -0.5), Point2::new(5.0, 0.5)).unwrap();
        let traj = [
            timed(0.0, 0.0, 0.0, 0.0, 2.0, 0.0),
            timed(1.0, 2.0, 0.0, 0.0, 2.0, 0.0),
            timed(2.0, 4.0, 0.0, 0.0, 2.0, 0.0),
        ];
        let r = trajectory_safety_check(&traj, &[block], &car(), 200).unwrap();
        assert!(!r.safe);
        // Front bumper (x + 0.96) reaches x = 4 at t = 1.52.
        let t = r.first_violation_time.unwrap();
        assert!(t > 1.0 && t <= 2.0);
        assert!((t - 1.52).abs() <= 1.0 / 200.0 + 1e-12, "t = {t}");
        assert_eq!(r.min_clearance, 0.0);
    }

    #[test]
    fn malformed_trajectories_are_rejected() {
        let a = timed(0.0, 0.0, 0.0, 0.0, 1.0, 0.0);
        let b = timed(0.0, 1.0, 0.0, 0.0, 1.0, 0.0);
        assert!(trajectory_safety_check(&[a, b], &[], &car(), 200).is_err());
        let fast = timed(1.0, 1.0, 0.0, 0.0, 9.0, 0.0);
        assert!(trajectory_safety_check(&[a, fast], &[], &car(), 200).is_err());
        assert!(trajectory_safety_check(&[], &[], &car(), 200).is_err());
        assert!(trajectory_safety_check(&[a], &[], &car(), 10).is_err());
    }

    #[test]
    fn prefilter_does_not_change_results() {
        let obstacles = vec![
            ConvexPolygon::rectangle(Point2::new(3.0, 2.0), Point2::new(4.0, 3.0)).unwrap(),
            ConvexPolygon::rectangle(Point2::new(30.0, 30.0), Point2::new(31.0, 31.0)).unwrap(),
            ConvexPolygon::rectangle(Point2::new(-10.0, 5.0), Point2::new(-9.0, 6.0)).unwrap(),
        ];
        let s0 = State::new(0.0, 0.0, 0.0, 2.0, 0.3);
        let mut traj = vec![TimedState::new(0.0, s0)];
        for k in 1..6 {
            let prev = traj[k - 1];
            traj.push(TimedState::new(k as f64 * 0.5, propagate_arc(prev.state, 0.5, 2.8)));
        }
        let a = trajectory_safety_check(&traj, &obstacles, &car(), 100).unwrap();
        let b = trajectory_safety_check_unfiltered(&traj, &obstacles, &car(), 100).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_state_trajectory_checks_its_pose() {
        let block = ConvexPolygon::rectangle(Point2::new(0.5, -0.5), Point2::new(1.5, 0.5)).unwrap();
        let r = trajectory_safety_check(&[timed(0.0, 0.0, 0.0, FRAC_PI_2, 0.0, 0.0)], &[block], &car(), 50)
            .unwrap();
        assert!(!r.safe);
    }
}
