//! Seed generation: a kinematic grid search for a coarse path, a time-optimal
//! speed profile along it, and the thinning of that dense trajectory into a
//! non-uniform initial guess whose spacing respects the embodied-box
//! prerequisites.

mod dubins;
mod guess;
mod hybrid_astar;
mod velocity;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::geometry::{ConvexPolygon, Pose, VehicleParams};
use crate::harness::scenario::{Scenario, Workspace};
use crate::kinematics::TimedState;

pub use dubins::{dubins_paths, DubinsPath, Segment, Turn};
pub use guess::{
    form_initial_guess, form_initial_guess_with, guess_from_anchors, guess_from_times, unwrap_goal, GuessOptions,
};
pub use hybrid_astar::{plan_path, PathQuery};
pub use velocity::{attach_velocity, resample_equidistant};

/// Tunables of the coarse search and seed construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerOptions {
    pub grid_xy: f64,
    pub grid_theta: f64,
    pub primitive_length: f64,
    /// Arc-length spacing of footprint checks along primitives.
    pub check_step: f64,
    pub goal_tolerance_xy: f64,
    pub goal_tolerance_theta: f64,
    pub max_expansions: usize,
    /// Extra clearance the coarse path keeps from obstacles. The search is
    /// retried without it if no path exists.
    pub clearance_margin: f64,
    /// Dubins shots use `shot_radius_factor` times the minimum turning radius.
    pub shot_radius_factor: f64,
    pub steering_change_penalty: f64,
    pub steering_penalty: f64,
    /// Time spacing of the dense resample.
    pub dense_dt: f64,
    /// Use the largest curvature over a candidate segment instead of the
    /// anchor's when thinning the dense trajectory.
    pub conservative_curvature: bool,
}

impl Default for PlannerOptions {
    fn default() -> Self {
        Self {
            grid_xy: 0.2,
            grid_theta: PI / 18.0,
            primitive_length: 0.5,
            check_step: 0.05,
            goal_tolerance_xy: 0.2,
            goal_tolerance_theta: 0.1,
            max_expansions: 200_000,
            clearance_margin: 0.3,
            shot_radius_factor: 1.25,
            steering_change_penalty: 0.2,
            steering_penalty: 0.05,
            dense_dt: 0.01,
            conservative_curvature: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub pose: Pose,
    /// Cumulative arc length from the path start.
    pub s: f64,
    /// Curvature of the piece leaving this point.
    pub kappa: f64,
}

/// A forward-driving path made of constant-curvature pieces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoarsePath {
    pub points: Vec<PathPoint>,
}

impl CoarsePath {
    pub fn length(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.s)
    }

    pub fn poses(&self) -> impl Iterator<Item = Pose> + '_ {
        self.points.iter().map(|p| p.pose)
    }
}

/// One sample of a coarse trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoarseWaypoint {
    pub t: f64,
    pub s: f64,
    pub pose: Pose,
    pub v: f64,
    pub phi: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoarseTrajectory {
    pub waypoints: Vec<CoarseWaypoint>,
}

impl CoarseTrajectory {
    pub fn duration(&self) -> f64 {
        self.waypoints.last().map_or(0.0, |w| w.t)
    }
}

/// Warm start for the transcription.
///
/// `anchors` are the dense waypoints kept by the thinning scan, carrying the
/// speed and curvature the scan tested. `states` encode the same instants in
/// the held-state model: interval `i` uses the average speed and heading-rate
/// curvature between anchors `i` and `i + 1`, and the end points carry the
/// boundary states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialGuess {
    pub anchors: Vec<CoarseWaypoint>,
    pub states: Vec<TimedState>,
}

impl InitialGuess {
    pub fn n_fe(&self) -> usize {
        self.states.len().saturating_sub(1)
    }

    pub fn duration(&self) -> f64 {
        self.states.last().map_or(0.0, |s| s.t)
    }
}

/// Coarse path for a scenario, trying the configured clearance margin first
/// and falling back to zero margin.
pub fn plan_coarse_path(scenario: &Scenario) -> Result<CoarsePath, crate::error::PlanError> {
    let opts = scenario.planner;
    let query = |margin: f64| PathQuery {
        workspace: scenario.workspace,
        obstacles: &scenario.obstacles,
        start: scenario.start.pose(),
        goal: scenario.goal.pose(),
        params: scenario.vehicle,
        margin,
        options: opts,
    };
    match plan_path(&query(opts.clearance_margin)) {
        Ok(p) => Ok(p),
        Err(e) if opts.clearance_margin > 0.0 => plan_path(&query(0.0)).map_err(|_| e),
        Err(e) => Err(e),
    }
}

/// Footprint enlarged by `margin` on every side lies inside the workspace and
/// clear of every obstacle.
pub fn footprint_free(
    pose: Pose,
    params: &VehicleParams,
    margin: f64,
    workspace: &Workspace,
    obstacles: &[ConvexPolygon],
) -> bool {
    use crate::geometry::{oriented_rect_corners, rings_overlap, Aabb};
    let hw = params.half_width() + margin;
    let c = oriented_rect_corners(pose, params.front_length + margin, params.rear_length + margin, hw, hw);
    let fp = Aabb::from_points(&c);
    if !workspace.contains_box(&fp) {
        return false;
    }
    let ring = [c[0], c[3], c[2], c[1]];
    obstacles
        .iter()
        .all(|o| !o.aabb().intersects(&fp) || !rings_overlap(&ring, o.vertices()))
}
