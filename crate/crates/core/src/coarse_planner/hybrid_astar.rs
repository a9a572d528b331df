//! Forward-only Hybrid A* over (x, y, θ) with constant-curvature motion
//! primitives and Dubins shots to the goal.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::f64::consts::PI;

use crate::error::PlanError;
use crate::geometry::{ConvexPolygon, Pose, VehicleParams};
use crate::harness::scenario::Workspace;
use crate::kinematics::{advance_pose, curvature};

use super::dubins::dubins_paths;
use super::{footprint_free, CoarsePath, PathPoint, PlannerOptions};

/// Distance to the goal below which every expansion tries a Dubins shot.
const SHOT_RADIUS: f64 = 5.0;
const SHOT_EVERY: usize = 5;

#[derive(Debug, Clone, Copy)]
pub struct PathQuery<'a> {
    pub workspace: Workspace,
    pub obstacles: &'a [ConvexPolygon],
    pub start: Pose,
    pub goal: Pose,
    pub params: VehicleParams,
    /// Clearance added around the footprint during the search.
    pub margin: f64,
    pub options: PlannerOptions,
}

struct Node {
    pose: Pose,
    g: f64,
    s: f64,
    parent: Option<usize>,
    /// Curvature of the primitive that reached this node.
    kappa: f64,
    steer: usize,
}

#[derive(PartialEq)]
struct Open {
    f: f64,
    idx: usize,
}

impl Eq for Open {}

impl Ord for Open {
    fn cmp(&self, other: &Self) -> Ordering {
        other.f.total_cmp(&self.f).then_with(|| other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

impl PathQuery<'_> {
    fn free(&self, pose: Pose) -> bool {
        footprint_free(pose, &self.params, self.margin, &self.workspace, self.obstacles)
    }

    fn cell(&self, p: Pose) -> (i64, i64, i64) {
        let o = &self.options;
        (
            ((p.x - self.workspace.x_min) / o.grid_xy).floor() as i64,
            ((p.y - self.workspace.y_min) / o.grid_xy).floor() as i64,
            (p.theta.rem_euclid(2.0 * PI) / o.grid_theta).floor() as i64,
        )
    }

    fn arc_free(&self, from: Pose, kappa: f64, length: f64) -> bool {
        let n = (length / self.options.check_step).ceil().max(1.0) as usize;
        (1..=n).all(|k| self.free(advance_pose(from, kappa, length * k as f64 / n as f64)))
    }

    fn near_goal(&self, p: Pose) -> bool {
        p.position().distance(self.goal.position()) <= self.options.goal_tolerance_xy
            && angle_gap(p.theta, self.goal.theta) <= self.options.goal_tolerance_theta
    }

    /// Collision-free Dubins pieces from `from` to the goal, if any.
    fn shot(&self, from: Pose) -> Option<Vec<(f64, f64)>> {
        let radius = self.options.shot_radius_factor / self.params.max_curvature();
        for path in dubins_paths(from, self.goal, radius) {
            let mut pose = from;
            let mut ok = true;
            let mut pieces = Vec::with_capacity(3);
            for seg in &path.segments {
                if seg.length <= 1e-9 {
                    continue;
                }
                let k = path.curvature_of(seg.turn);
                if !self.arc_free(pose, k, seg.length) {
                    ok = false;
                    break;
                }
                pose = advance_pose(pose, k, seg.length);
                pieces.push((k, seg.length));
            }
            if ok {
                return Some(pieces);
            }
        }
        None
    }
}

fn build_path(nodes: &[Node], last: usize, tail: &[(f64, f64)]) -> CoarsePath {
    let mut chain = vec![last];
    while let Some(p) = nodes[*chain.last().unwrap()].parent {
        chain.push(p);
    }
    chain.reverse();
    let mut points: Vec<PathPoint> = chain
        .iter()
        .enumerate()
        .map(|(i, &idx)| PathPoint {
            pose: nodes[idx].pose,
            s: nodes[idx].s,
            kappa: chain.get(i + 1).map_or(0.0, |&n| nodes[n].kappa),
        })
        .collect();
    let end = points[points.len() - 1];
    let (mut pose, mut s) = (end.pose, end.s);
    for &(k, len) in tail {
        points.last_mut().unwrap().kappa = k;
        pose = advance_pose(pose, k, len);
        s += len;
        points.push(PathPoint { pose, s, kappa: 0.0 });
    }
    CoarsePath { points }
}

/// Searches for a forward path from `query.start` to `query.goal`.
pub fn plan_path(query: &PathQuery<'_>) -> Result<CoarsePath, PlanError> {
    let o = &query.options;
    let p = &query.params;
    let start_free = footprint_free(query.start, p, 0.0, &query.workspace, query.obstacles);
    let goal_free = footprint_free(query.goal, p, 0.0, &query.workspace, query.obstacles);
    if !start_free || !goal_free {
        return Err(PlanError::InvalidInput(format!(
            "footprint not collision-free at the {}",
            if start_free { "goal" } else { "start" }
        )));
    }
    if query.near_goal(query.start) {
        return Ok(CoarsePath { points: vec![PathPoint { pose: query.start, s: 0.0, kappa: 0.0 }] });
    }
    let steers: Vec<f64> = [-1.0, -0.5, 0.0, 0.5, 1.0].iter().map(|f| f * p.phi_max).collect();
    let kappas: Vec<f64> = steers.iter().map(|&phi| curvature(phi, p.wheelbase)).collect();
    let heuristic = |pose: Pose| pose.position().distance(query.goal.position());

    let mut nodes = vec![Node { pose: query.start, g: 0.0, s: 0.0, parent: None, kappa: 0.0, steer: 2 }];
    let mut open = BinaryHeap::new();
    open.push(Open { f: heuristic(query.start), idx: 0 });
    let mut closed: HashMap<(i64, i64, i64), ()> = HashMap::new();
    let mut expanded = 0usize;
    while let Some(Open { idx, .. }) = open.pop() {
        let cell = query.cell(nodes[idx].pose);
        if closed.insert(cell, ()).is_some() {
            continue;
        }
        expanded += 1;
        if expanded > o.max_expansions {
            break;
        }
        let pose = nodes[idx].pose;
        if query.near_goal(pose) {
            return Ok(build_path(&nodes, idx, &[]));
        }
        if expanded % SHOT_EVERY == 1 || heuristic(pose) < SHOT_RADIUS {
            if let Some(tail) = query.shot(pose) {
                return Ok(build_path(&nodes, idx, &tail));
            }
        }
        for (si, &k) in kappas.iter().enumerate() {
            if !query.arc_free(pose, k, o.primitive_length) {
                continue;
            }
            let next = advance_pose(pose, k, o.primitive_length);
            if closed.contains_key(&query.cell(next)) {
                continue;
            }
            let mut g = nodes[idx].g + o.primitive_length;
            g += o.steering_penalty * (steers[si].abs() / p.phi_max) * o.primitive_length;
            if si != nodes[idx].steer {
                g += o.steering_change_penalty;
            }
            let s = nodes[idx].s + o.primitive_length;
            nodes.push(Node { pose: next, g, s, parent: Some(idx), kappa: k, steer: si });
            open.push(Open { f: g + heuristic(next), idx: nodes.len() - 1 });
        }
    }
    Err(PlanError::NoPathFound { expanded })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point2;

    fn query<'a>(obstacles: &'a [ConvexPolygon], start: Pose, goal: Pose) -> PathQuery<'a> {
        PathQuery {
            workspace: Workspace { x_min: 0.0, x_max: 30.0, y_min: 0.0, y_max: 10.0 },
            obstacles,
            start,
            goal,
            params: VehicleParams::passenger_car(),
            margin: 0.0,
            options: PlannerOptions::default(),
        }
    }

    fn replay(path: &CoarsePath) -> Pose {
        let pts = &path.points;
        let mut pose = pts[0].pose;
        for w in pts.windows(2) {
            pose = advance_pose(pose, w[0].kappa, w[1].s - w[0].s);
            assert!(pose.position().distance(w[1].pose.position()) < 1e-6);
        }
        pose
    }

    #[test]
    fn straight_corridor_is_nearly_straight() {
        let q = query(&[], Pose::new(2.0, 5.0, 0.0), Pose::new(27.0, 5.0, 0.0));
        let path = plan_path(&q).unwrap();
        assert!(path.length() <= 25.0 * 1.05);
        let end = replay(&path);
        assert!(end.position().distance(q.goal.position()) < 1e-6);
    }

    #[test]
    fn start_equals_goal() {
        let q = query(&[], Pose::new(2.0, 5.0, 0.0), Pose::new(2.0, 5.0, 0.0));
        assert_eq!(plan_path(&q).unwrap().points.len(), 1);
    }

    #[test]
    fn detours_around_a_block() {
        let block = ConvexPolygon::rectangle(Point2::new(12.0, 3.5), Point2::new(14.0, 7.0)).unwrap();
        let obstacles = [block];
        let q = query(&obstacles, Pose::new(2.0, 5.0, 0.0), Pose::new(27.0, 5.0, 0.0));
        let path = plan_path(&q).unwrap();
        let end = replay(&path);
        assert!(end.position().distance(q.goal.position()) <= 0.2);
        // Footprints sampled along every piece stay clear.
        for w in path.points.windows(2) {
            let len = w[1].s - w[0].s;
            for k in 0..=10 {
                let pose = advance_pose(w[0].pose, w[0].kappa, len * k as f64 / 10.0);
                assert!(q.free(pose), "{pose:?}");
            }
        }
    }

    #[test]
    fn walled_off_goal_fails() {
        let wall = ConvexPolygon::rectangle(Point2::new(14.0, 0.0), Point2::new(15.0, 10.0)).unwrap();
        let obstacles = [wall];
        let mut q = query(&obstacles, Pose::new(2.0, 5.0, 0.0), Pose::new(27.0, 5.0, 0.0));
        q.options.max_expansions = 20_000;
        assert!(matches!(plan_path(&q), Err(PlanError::NoPathFound { .. })));
    }
}
