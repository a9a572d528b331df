//! Versioned JSON scenario files.
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "name": "corridor",
//!   "workspace": { "x_min": 0, "x_max": 30, "y_min": 0, "y_max": 10 },
//!   "obstacles": [ [[10, 0], [12, 0], [12, 4], [10, 4]] ],
//!   "start": { "x": 2, "y": 5, "theta": 0, "v": 0, "phi": 0 },
//!   "goal":  { "x": 27, "y": 5, "theta": 0, "v": 0, "phi": 0 },
//!   "lambda": 0.75
//! }
//! ```
//!
//! Lengths are meters, angles radians, speeds m/s and times seconds.
//! Obstacles are convex vertex lists in counter-clockwise order (clockwise
//! input is accepted and reversed). Optional keys: `vehicle` (defaults to the
//! passenger car), `lambda` (0.75), `dt_max` (1.0), `seed` (0), and the
//! `planner`, `nlp` and `solver` option blocks.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::coarse_planner::{footprint_free, PlannerOptions};
use crate::embodied_box::check_vehicle_admissible;
use crate::error::{GeometryError, ScenarioError};
use crate::geometry::{Aabb, ConvexPolygon, Point2, VehicleParams};
use crate::kinematics::State;
use crate::solver::SolverOptions;
use crate::trajectory_nlp::NlpOptions;

pub const FORMAT_VERSION: u32 = 1;
pub const DEFAULT_LAMBDA: f64 = 0.75;
pub const DEFAULT_DT_MAX: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Workspace {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Workspace {
    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn contains_box(&self, b: &Aabb) -> bool {
        self.contains(b.min) && self.contains(b.max)
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }
}

/// On-disk representation, before validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub format_version: u32,
    #[serde(default)]
    pub name: String,
    pub workspace: Workspace,
    #[serde(default)]
    pub obstacles: Vec<Vec<[f64; 2]>>,
    /// Outward offset applied to every obstacle, m.
    #[serde(default)]
    pub obstacle_margin: f64,
    pub start: State,
    pub goal: State,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vehicle: Option<VehicleParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_max: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planner: Option<PlannerOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nlp: Option<NlpOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverOptions>,
}

/// A validated planning task.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub workspace: Workspace,
    pub obstacles: Vec<ConvexPolygon>,
    pub start: State,
    pub goal: State,
    pub vehicle: VehicleParams,
    pub lambda: f64,
    /// Whether `lambda` was absent from the file and the default applied.
    pub lambda_defaulted: bool,
    pub dt_max: f64,
    pub seed: u64,
    pub planner: PlannerOptions,
    pub nlp: NlpOptions,
    pub solver: SolverOptions,
}

fn invalid(invariant: &'static str, detail: impl Into<String>) -> ScenarioError {
    ScenarioError::Validation { invariant, detail: detail.into() }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path)?;
    parse_scenario(&text)
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let file: ScenarioFile = serde_json::from_str(text)?;
    Scenario::from_file(file)
}

fn check_state(which: &'static str, s: &State, params: &VehicleParams) -> Result<(), ScenarioError> {
    if !s.is_finite() {
        return Err(invalid(which, format!("non-finite state {s:?}")));
    }
    if s.v < 0.0 || s.v > params.v_max {
        return Err(invalid(which, format!("speed {} outside [0, {}]", s.v, params.v_max)));
    }
    if s.phi.abs() > params.phi_max {
        return Err(invalid(which, format!("steering {} exceeds {}", s.phi, params.phi_max)));
    }
    Ok(())
}

impl Scenario {
    pub fn from_file(file: ScenarioFile) -> Result<Self, ScenarioError> {
        if file.format_version != FORMAT_VERSION {
            return Err(invalid(
                "format_version",
                format!("unsupported version {}, expected {FORMAT_VERSION}", file.format_version),
            ));
        }
        let ws = file.workspace;
        if ![ws.x_min, ws.x_max, ws.y_min, ws.y_max].iter().all(|c| c.is_finite())
            || ws.x_min >= ws.x_max
            || ws.y_min >= ws.y_max
        {
            return Err(invalid("workspace", format!("degenerate bounds {ws:?}")));
        }
        let vehicle = file.vehicle.unwrap_or_else(VehicleParams::passenger_car);
        vehicle
            .validate()
            .map_err(|e| invalid("vehicle", e.to_string()))?;
        if !check_vehicle_admissible(&vehicle) {
            return Err(invalid(
                "admissibility",
                format!(
                    "2*wheelbase = {} must exceed width*tan(phi_max) = {}",
                    2.0 * vehicle.wheelbase,
                    vehicle.width * vehicle.phi_max.tan()
                ),
            ));
        }
        if !(file.obstacle_margin >= 0.0 && file.obstacle_margin.is_finite()) {
            return Err(invalid("obstacle_margin", format!("{} is not a finite value >= 0", file.obstacle_margin)));
        }
        let obstacles = file
            .obstacles
            .iter()
            .enumerate()
            .map(|(i, verts)| {
                ConvexPolygon::new(verts.iter().map(|&[x, y]| Point2::new(x, y)).collect())
                    .map(|p| p.offset(file.obstacle_margin))
                    .map_err(|e: GeometryError| invalid("obstacle", format!("obstacle {i}: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let lambda = file.lambda.unwrap_or(DEFAULT_LAMBDA);
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(invalid("lambda", format!("{lambda} not in (0, 1)")));
        }
        let dt_max = file.dt_max.unwrap_or(DEFAULT_DT_MAX);
        if !(dt_max.is_finite() && dt_max > 0.0) {
            return Err(invalid("dt_max", format!("{dt_max} must be positive")));
        }
        let nlp = file.nlp.unwrap_or_default();
        if !(nlp.dt_floor > 0.0 && nlp.dt_floor < dt_max) {
            return Err(invalid("nlp.dt_floor", format!("{} not in (0, dt_max)", nlp.dt_floor)));
        }
        if !(nlp.collision_margin >= 0.0 && nlp.collision_margin.is_finite()) {
            return Err(invalid("nlp.collision_margin", format!("{}", nlp.collision_margin)));
        }
        let solver = file.solver.unwrap_or_default();
        solver.validate().map_err(|d| invalid("solver", d))?;
        let planner = file.planner.unwrap_or_default();
        check_state("start", &file.start, &vehicle)?;
        check_state("goal", &file.goal, &vehicle)?;
        for (which, s) in [("start", &file.start), ("goal", &file.goal)] {
            if !footprint_free(s.pose(), &vehicle, 0.0, &ws, &obstacles) {
                return Err(invalid(
                    which,
                    format!("footprint at ({}, {}, {}) leaves the workspace or hits an obstacle", s.x, s.y, s.theta),
                ));
            }
        }
        Ok(Self {
            name: file.name,
            workspace: ws,
            obstacles,
            start: file.start,
            goal: file.goal,
            vehicle,
            lambda,
            lambda_defaulted: file.lambda.is_none(),
            dt_max,
            seed: file.seed,
            planner,
            nlp,
            solver,
        })
    }

    pub fn to_file(&self) -> ScenarioFile {
        ScenarioFile {
            format_version: FORMAT_VERSION,
            name: self.name.clone(),
            workspace: self.workspace,
            obstacles: self
                .obstacles
                .iter()
                .map(|o| o.vertices().iter().map(|p| [p.x, p.y]).collect())
                .collect(),
            obstacle_margin: 0.0,
            start: self.start,
            goal: self.goal,
            vehicle: Some(self.vehicle),
            lambda: (!self.lambda_defaulted).then_some(self.lambda),
            dt_max: Some(self.dt_max),
            seed: self.seed,
            planner: Some(self.planner),
            nlp: Some(self.nlp),
            solver: Some(self.solver),
        }
    }

    /// Copy with different start and goal states, re-validated.
    pub fn with_endpoints(&self, start: State, goal: State) -> Result<Self, ScenarioError> {
        let mut file = self.to_file();
        file.start = start;
        file.goal = goal;
        let mut s = Self::from_file(file)?;
        s.lambda = self.lambda;
        s.lambda_defaulted = self.lambda_defaulted;
        Ok(s)
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self, ScenarioError> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(invalid("lambda", format!("{lambda} not in (0, 1)")));
        }
        Ok(Self { lambda, lambda_defaulted: false, ..self.clone() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CORRIDOR: &str = r#"{
        "format_version": 1,
        "name": "two boxes",
        "workspace": {"x_min": 0, "x_max": 30, "y_min": 0, "y_max": 10},
        "obstacles": [
            [[10, 0], [12, 0], [12, 4], [10, 4]],
            [[18, 10], [18, 6], [20, 6], [20, 10]]
        ],
        "start": {"x": 2, "y": 5, "theta": 0, "v": 0, "phi": 0},
        "goal": {"x": 27, "y": 5, "theta": 0, "v": 0, "phi": 0}
    }"#;

    fn with(key: &str, value: &str) -> String {
        let mut v: serde_json::Value = serde_json::from_str(CORRIDOR).unwrap();
        v[key] = serde_json::from_str(value).unwrap();
        v.to_string()
    }

    fn invariant_of(text: &str) -> &'static str {
        match parse_scenario(text) {
            Err(ScenarioError::Validation { invariant, .. }) => invariant,
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn loads_with_defaults() {
        let s = parse_scenario(CORRIDOR).unwrap();
        assert_eq!(s.lambda, 0.75);
        assert!(s.lambda_defaulted);
        assert_eq!(s.vehicle, VehicleParams::passenger_car());
        assert_eq!(s.obstacles.len(), 2);
        // The clockwise second obstacle is stored counter-clockwise.
        assert!(s.obstacles[1].area() > 0.0);
        assert_eq!(s.dt_max, 1.0);
    }

    #[test]
    fn obstacle_margin_offsets_edges() {
        let s = parse_scenario(&with("obstacle_margin", "0.25")).unwrap();
        let b = s.obstacles[0].aabb();
        assert!((b.min.x - 9.75).abs() < 1e-12 && (b.max.x - 12.25).abs() < 1e-12);
        assert!((b.max.y - 4.25).abs() < 1e-12);
        assert_eq!(invariant_of(&with("obstacle_margin", "-0.1")), "obstacle_margin");
    }

    #[test]
    fn explicit_lambda_is_kept() {
        let s = parse_scenario(&with("lambda", "0.5")).unwrap();
        assert_eq!(s.lambda, 0.5);
        assert!(!s.lambda_defaulted);
    }

    #[test]
    fn rejects_inadmissible_vehicle() {
        let mut car = VehicleParams::passenger_car();
        car.width = 9.0;
        let text = with("vehicle", &serde_json::to_string(&car).unwrap());
        assert_eq!(invariant_of(&text), "admissibility");
    }

    #[test]
    fn rejects_bad_fields() {
        assert_eq!(invariant_of(&with("lambda", "1.0")), "lambda");
        assert_eq!(invariant_of(&with("format_version", "2")), "format_version");
        assert_eq!(
            invariant_of(&with("start", r#"{"x": 11, "y": 2, "theta": 0, "v": 0, "phi": 0}"#)),
            "start"
        );
        assert_eq!(
            invariant_of(&with("goal", r#"{"x": 29.5, "y": 5, "theta": 0, "v": 0, "phi": 0}"#)),
            "goal"
        );
        assert_eq!(
            invariant_of(&with("goal", r#"{"x": 27, "y": 5, "theta": 0, "v": 9, "phi": 0}"#)),
            "goal"
        );
        assert_eq!(invariant_of(&with("obstacles", "[[[0, 0], [1, 1], [2, 2]]]")), "obstacle");
    }

    #[test]
    fn parse_errors_are_distinguished() {
        assert!(matches!(parse_scenario("{"), Err(ScenarioError::Parse(_))));
        assert!(matches!(parse_scenario(&with("bogus", "1")), Err(ScenarioError::Parse(_))));
    }

    #[test]
    fn file_round_trip() {
        let s = parse_scenario(&with("lambda", "0.6")).unwrap();
        let again = Scenario::from_file(s.to_file()).unwrap();
        assert_eq!(s, again);
    }
}
