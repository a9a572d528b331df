//! Time-optimal speed along a fixed path under acceleration, speed and
//! steering-rate limits, and dense resampling of the result.

use crate::error::PlanError;
use crate::geometry::{Pose, VehicleParams};
use crate::kinematics::{advance_pose, steering_for_curvature};

use super::{CoarsePath, CoarseTrajectory, CoarseWaypoint};

/// Longest arc between speed stations.
const STATION_SPACING: f64 = 0.1;
/// Distance over which a steering change is ramped when capping speed.
const STEERING_RAMP: f64 = 0.5;

struct Station {
    s: f64,
    pose: Pose,
    kappa: f64,
}

fn stations(path: &CoarsePath) -> Vec<Station> {
    let mut out = Vec::new();
    for pair in path.points.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let len = b.s - a.s;
        if len <= 0.0 {
            continue;
        }
        let n = (len / STATION_SPACING).ceil().max(1.0) as usize;
        for k in 0..n {
            let ds = len * k as f64 / n as f64;
            out.push(Station { s: a.s + ds, pose: advance_pose(a.pose, a.kappa, ds), kappa: a.kappa });
        }
    }
    if let Some(last) = path.points.last() {
        out.push(Station { s: last.s, pose: last.pose, kappa: last.kappa });
    }
    out
}

/// Attaches the fastest speed profile of the accelerate–cruise–decelerate
/// family to `path`.
///
/// Speed is capped at `v_max` and, around every curvature change, low enough
/// that the steering change can be completed at `omega_max` over a short
/// ramp distance.
pub fn attach_velocity(
    path: &CoarsePath,
    params: &VehicleParams,
    v_init: f64,
    v_end: f64,
) -> Result<CoarseTrajectory, PlanError> {
    for (name, v) in [("v_init", v_init), ("v_end", v_end)] {
        if !(0.0..=params.v_max).contains(&v) {
            return Err(PlanError::InvalidInput(format!("{name} = {v} outside [0, {}]", params.v_max)));
        }
    }
    if path.points.is_empty() {
        return Err(PlanError::InvalidInput("empty path".into()));
    }
    let st = stations(path);
    let wb = params.wheelbase;
    let phis: Vec<f64> = st.iter().map(|p| steering_for_curvature(p.kappa, wb)).collect();
    let n = st.len();
    if n == 1 {
        let p = &st[0];
        return Ok(CoarseTrajectory {
            waypoints: vec![CoarseWaypoint { t: 0.0, s: 0.0, pose: p.pose, v: v_init, phi: phis[0], kappa: p.kappa }],
        });
    }

    let mut cap2 = vec![params.v_max * params.v_max; n];
    for j in 1..n {
        let dphi = (phis[j] - phis[j - 1]).abs();
        if dphi > 1e-12 {
            let v = params.omega_max * STEERING_RAMP / dphi;
            let s_tr = st[j].s;
            for (k, c) in cap2.iter_mut().enumerate() {
                if st[k].s <= s_tr + 1e-12 && st[k].s >= s_tr - STEERING_RAMP - 1e-12 {
                    *c = c.min(v * v);
                }
            }
        }
    }
    if v_init * v_init > cap2[0] + 1e-12 {
        return Err(PlanError::InfeasibleProfile(format!(
            "v_init = {v_init} exceeds the speed cap {} at the path start",
            cap2[0].sqrt()
        )));
    }

    let acc = params.a_max;
    let dec = -params.a_min;
    let mut v2 = cap2.clone();
    v2[0] = v_init * v_init;
    for j in 1..n {
        let ds = st[j].s - st[j - 1].s;
        v2[j] = v2[j].min(v2[j - 1] + 2.0 * acc * ds);
    }
    if v2[n - 1] + 1e-9 < v_end * v_end {
        return Err(PlanError::InfeasibleProfile(format!(
            "v_end = {v_end} unreachable, at most {} at the path end",
            v2[n - 1].sqrt()
        )));
    }
    if v_end * v_end > cap2[n - 1] + 1e-12 {
        return Err(PlanError::InfeasibleProfile(format!("v_end = {v_end} exceeds the end speed cap")));
    }
    v2[n - 1] = v_end * v_end;
    for j in (0..n - 1).rev() {
        let ds = st[j + 1].s - st[j].s;
        v2[j] = v2[j].min(v2[j + 1] + 2.0 * dec * ds);
    }
    if v2[0] + 1e-9 < v_init * v_init {
        return Err(PlanError::InfeasibleProfile(format!(
            "cannot slow from v_init = {v_init} within {} m",
            path.length()
        )));
    }
    v2[0] = v_init * v_init;

    let mut waypoints = Vec::with_capacity(n);
    let mut t = 0.0;
    for j in 0..n {
        let v = v2[j].max(0.0).sqrt();
        if j > 0 {
            let prev: &CoarseWaypoint = &waypoints[j - 1];
            let ds = st[j].s - st[j - 1].s;
            let denom = prev.v + v;
            if denom <= 0.0 {
                return Err(PlanError::InfeasibleProfile(format!("zero speed over station {j}")));
            }
            t += 2.0 * ds / denom;
        }
        waypoints.push(CoarseWaypoint { t, s: st[j].s, pose: st[j].pose, v, phi: phis[j], kappa: st[j].kappa });
    }
    Ok(CoarseTrajectory { waypoints })
}

/// Waypoint at time `t`, assuming constant acceleration and the leaving
/// curvature between consecutive waypoints.
pub(crate) fn interpolate(coarse: &CoarseTrajectory, t: f64) -> CoarseWaypoint {
    let w = &coarse.waypoints;
    let last = w[w.len() - 1];
    if t >= last.t {
        return last;
    }
    let j = w.partition_point(|p| p.t <= t).saturating_sub(1);
    let (a, b) = (w[j], w[j + 1]);
    let span = b.t - a.t;
    let tau = t - a.t;
    let accel = if span > 0.0 { (b.v - a.v) / span } else { 0.0 };
    let ds = a.v * tau + 0.5 * accel * tau * tau;
    CoarseWaypoint {
        t,
        s: a.s + ds,
        pose: advance_pose(a.pose, a.kappa, ds),
        v: a.v + accel * tau,
        phi: a.phi,
        kappa: a.kappa,
    }
}

/// Resamples at `0, dt, 2 dt, …` and appends the final instant.
pub fn resample_equidistant(coarse: &CoarseTrajectory, dt: f64) -> Result<CoarseTrajectory, PlanError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(PlanError::InvalidInput(format!("resample step {dt} must be positive")));
    }
    let Some(last) = coarse.waypoints.last() else {
        return Err(PlanError::InvalidInput("empty coarse trajectory".into()));
    };
    let total = last.t;
    let mut out = Vec::new();
    let mut k = 0usize;
    loop {
        let t = k as f64 * dt;
        if t >= total - 1e-9 * dt {
            break;
        }
        out.push(interpolate(coarse, t));
        k += 1;
    }
    out.push(*last);
    Ok(CoarseTrajectory { waypoints: out })
}

impl CoarseTrajectory {
    /// Uniform motion along a single arc, sampled every `dt`.
    pub fn constant_arc(start: Pose, v: f64, kappa: f64, duration: f64, dt: f64, params: &VehicleParams) -> Self {
        let phi = steering_for_curvature(kappa, params.wheelbase);
        let n = (duration / dt).round() as usize;
        let waypoints = (0..=n)
            .map(|k| {
                let t = duration * k as f64 / n.max(1) as f64;
                let s = v * t;
                CoarseWaypoint { t, s, pose: advance_pose(start, kappa, s), v, phi, kappa }
            })
            .collect();
        Self { waypoints }
    }
}
