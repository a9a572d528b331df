//! Free-time transcription of the planning task.
//!
//! Decision vector, embodied mode: for each interval `i < N` the start state
//! `(x, y, θ, v, φ)` followed by its duration `ΔT_i`, then the final state.
//! Naive mode stores the `N + 1` states back to back followed by one shared
//! duration. Speed and steering are held over each interval and the pose
//! follows the exact circular arc.

use serde::{Deserialize, Serialize};

use crate::coarse_planner::{unwrap_goal, InitialGuess};
use crate::embodied_box::{check_vehicle_admissible, extents_unchecked, prerequisite_slacks};
use crate::error::NlpError;
use crate::geometry::{embodied_corners, footprint_corners, signed_outside_margin, ConvexPolygon, Point2, Pose, VehicleParams};
use crate::harness::scenario::Scenario;
use crate::kinematics::{advance_pose, curvature, State, TimedState};
use crate::solver::{ConstraintKind, Problem};

const STATE_DIM: usize = 5;
/// Upper bound on the shared duration of naive mode.
pub const NAIVE_DT_MAX: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Embodied,
    Naive,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Embodied => "embodied",
            Mode::Naive => "naive",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "embodied" => Ok(Mode::Embodied),
            "naive" => Ok(Mode::Naive),
            other => Err(format!("unknown mode `{other}`, expected embodied or naive")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NlpOptions {
    /// Required excess of the triangle-area sum over the polygon area, m².
    pub collision_margin: f64,
    /// Smallest interval duration.
    pub dt_floor: f64,
    /// Use an explicit Euler step instead of the exact arc in the dynamics.
    pub euler: bool,
}

impl Default for NlpOptions {
    fn default() -> Self {
        Self { collision_margin: 1e-3, dt_floor: 1e-3, euler: false }
    }
}

/// Index map between named quantities and the flat decision vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub mode: Mode,
    pub n_fe: usize,
}

impl Layout {
    pub fn n_vars(&self) -> usize {
        match self.mode {
            Mode::Embodied => (STATE_DIM + 1) * self.n_fe + STATE_DIM,
            Mode::Naive => STATE_DIM * (self.n_fe + 1) + 1,
        }
    }

    /// Offset of state `i`.
    pub fn state(&self, i: usize) -> usize {
        match self.mode {
            Mode::Embodied => (STATE_DIM + 1) * i,
            Mode::Naive => STATE_DIM * i,
        }
    }

    /// Index of the duration of interval `i`.
    pub fn dt(&self, i: usize) -> usize {
        match self.mode {
            Mode::Embodied => (STATE_DIM + 1) * i + STATE_DIM,
            Mode::Naive => STATE_DIM * (self.n_fe + 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tag {
    StartState,
    GoalState,
    Dynamics,
    RateLimit,
    Prerequisite,
    /// Embodied box of interval `i` against one obstacle.
    CollisionBox,
    /// Plain footprint at a collocation point against one obstacle.
    CollisionFootprint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintValue {
    pub tag: Tag,
    /// Interval or collocation point the row belongs to.
    pub index: usize,
    pub obstacle: Option<usize>,
    pub kind: ConstraintKind,
    /// Residual for equalities, `g` with `g ≤ 0` feasible for inequalities.
    pub value: f64,
}

#[derive(Debug, Clone)]
struct Block {
    tag: Tag,
    index: usize,
    obstacle: Option<usize>,
    support: Vec<usize>,
    rows: usize,
    first_row: usize,
    kind: ConstraintKind,
}

/// Per-tag row counts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProblemStats {
    pub n_fe: usize,
    pub variables: usize,
    pub equalities: usize,
    pub inequalities: usize,
    pub collision_box_rows: usize,
    pub collision_footprint_rows: usize,
    pub prerequisite_rows: usize,
}

#[derive(Debug, Clone)]
pub struct NlpProblem {
    pub layout: Layout,
    pub params: VehicleParams,
    pub obstacles: Vec<ConvexPolygon>,
    pub start: State,
    /// Goal with heading unwrapped next to the warm start's final heading.
    pub goal: State,
    pub options: NlpOptions,
    fd_step: f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
    blocks: Vec<Block>,
    kinds: Vec<ConstraintKind>,
}

fn state_of(v: &[f64]) -> State {
    State::new(v[0], v[1], v[2], v[3], v[4])
}

fn state_values(s: &State) -> [f64; STATE_DIM] {
    [s.x, s.y, s.theta, s.v, s.phi]
}

/// Builds the problem with `N_fe` taken from the warm start.
pub fn build_nlp(scenario: &Scenario, guess: &InitialGuess, mode: Mode) -> Result<NlpProblem, NlpError> {
    let params = scenario.vehicle;
    if !check_vehicle_admissible(&params) {
        return Err(NlpError::ScenarioRejected("vehicle geometry is not admissible".into()));
    }
    if guess.states.len() < 2 {
        return Err(NlpError::ScenarioRejected(format!("warm start has {} states", guess.states.len())));
    }
    let n_fe = guess.n_fe();
    let layout = Layout { mode, n_fe };
    let goal = unwrap_goal(scenario.goal, guess.states[n_fe].state.theta);
    let opts = scenario.nlp;
    let ws = scenario.workspace;

    let n = layout.n_vars();
    let mut lower = vec![f64::NEG_INFINITY; n];
    let mut upper = vec![f64::INFINITY; n];
    for i in 0..=n_fe {
        let o = layout.state(i);
        lower[o] = ws.x_min;
        upper[o] = ws.x_max;
        lower[o + 1] = ws.y_min;
        upper[o + 1] = ws.y_max;
        lower[o + 3] = 0.0;
        upper[o + 3] = params.v_max;
        lower[o + 4] = -params.phi_max;
        upper[o + 4] = params.phi_max;
    }
    for i in 0..n_fe {
        lower[layout.dt(i)] = opts.dt_floor;
        upper[layout.dt(i)] = match mode {
            Mode::Embodied => scenario.dt_max,
            Mode::Naive => NAIVE_DT_MAX,
        };
    }

    let mut blocks = Vec::new();
    let mut rows = 0;
    let mut push = |blocks: &mut Vec<Block>, tag, index, obstacle, support: Vec<usize>, count, kind| {
        blocks.push(Block { tag, index, obstacle, support, rows: count, first_row: rows, kind });
        rows += count;
    };
    let state_idx = |i: usize| (layout.state(i)..layout.state(i) + STATE_DIM).collect::<Vec<_>>();
    let interval_idx = |i: usize| {
        let mut s = state_idx(i);
        s.push(layout.dt(i));
        s
    };
    let pair_idx = |i: usize| {
        let mut s = interval_idx(i);
        s.extend(state_idx(i + 1));
        s
    };
    let eq = ConstraintKind::Eq;
    let ineq = ConstraintKind::Ineq;
    push(&mut blocks, Tag::StartState, 0, None, state_idx(0), STATE_DIM, eq);
    push(&mut blocks, Tag::GoalState, n_fe, None, state_idx(n_fe), STATE_DIM, eq);
    let obstacles = scenario.obstacles.clone();
    for i in 0..n_fe {
        push(&mut blocks, Tag::Dynamics, i, None, pair_idx(i), 3, eq);
        push(&mut blocks, Tag::RateLimit, i, None, pair_idx(i), 4, ineq);
        if mode == Mode::Embodied {
            push(&mut blocks, Tag::Prerequisite, i, None, interval_idx(i), 3, ineq);
            for (j, o) in obstacles.iter().enumerate() {
                push(&mut blocks, Tag::CollisionBox, i, Some(j), interval_idx(i), 4 + o.len(), ineq);
            }
        }
    }
    let footprint_points: Vec<usize> = match mode {
        Mode::Embodied => vec![n_fe],
        Mode::Naive => (0..=n_fe).collect(),
    };
    for i in footprint_points {
        for (j, o) in obstacles.iter().enumerate() {
            push(&mut blocks, Tag::CollisionFootprint, i, Some(j), state_idx(i), 4 + o.len(), ineq);
        }
    }
    let kinds = blocks.iter().flat_map(|b| std::iter::repeat(b.kind).take(b.rows)).collect();
    Ok(NlpProblem {
        layout,
        params,
        obstacles,
        start: scenario.start,
        goal,
        options: opts,
        fd_step: scenario.solver.fd_step,
        lower,
        upper,
        blocks,
        kinds,
    })
}

impl NlpProblem {
    pub fn n_vars(&self) -> usize {
        self.layout.n_vars()
    }

    pub fn n_fe(&self) -> usize {
        self.layout.n_fe
    }

    fn check_len(&self, x: &[f64]) -> Result<(), NlpError> {
        if x.len() == self.n_vars() {
            Ok(())
        } else {
            Err(NlpError::DimensionMismatch { expected: self.n_vars(), got: x.len() })
        }
    }

    pub fn stats(&self) -> ProblemStats {
        let mut s = ProblemStats { n_fe: self.n_fe(), variables: self.n_vars(), ..Default::default() };
        for b in &self.blocks {
            match b.kind {
                ConstraintKind::Eq => s.equalities += b.rows,
                ConstraintKind::Ineq => s.inequalities += b.rows,
            }
            match b.tag {
                Tag::CollisionBox => s.collision_box_rows += b.rows,
                Tag::CollisionFootprint => s.collision_footprint_rows += b.rows,
                Tag::Prerequisite => s.prerequisite_rows += b.rows,
                _ => {}
            }
        }
        s
    }

    /// Flat vector of a timed-state sequence with `N_fe + 1` entries. Naive
    /// mode uses the average interval duration.
    pub fn encode(&self, states: &[TimedState]) -> Result<Vec<f64>, NlpError> {
        let n_fe = self.n_fe();
        if states.len() != n_fe + 1 {
            return Err(NlpError::DimensionMismatch { expected: n_fe + 1, got: states.len() });
        }
        let mut x = vec![0.0; self.n_vars()];
        for (i, ts) in states.iter().enumerate() {
            let o = self.layout.state(i);
            x[o..o + STATE_DIM].copy_from_slice(&state_values(&ts.state));
        }
        match self.layout.mode {
            Mode::Embodied => {
                for i in 0..n_fe {
                    x[self.layout.dt(i)] = states[i + 1].t - states[i].t;
                }
            }
            Mode::Naive => x[self.layout.dt(0)] = (states[n_fe].t - states[0].t) / n_fe as f64,
        }
        Ok(x)
    }

    pub fn encode_guess(&self, guess: &InitialGuess) -> Result<Vec<f64>, NlpError> {
        self.encode(&guess.states)
    }

    pub fn decode_solution(&self, x: &[f64]) -> Result<Vec<TimedState>, NlpError> {
        self.check_len(x)?;
        let mut t = 0.0;
        let mut out = Vec::with_capacity(self.n_fe() + 1);
        for i in 0..=self.n_fe() {
            if i > 0 {
                t += x[self.layout.dt(i - 1)];
            }
            let o = self.layout.state(i);
            out.push(TimedState::new(t, state_of(&x[o..o + STATE_DIM])));
        }
        Ok(out)
    }

    /// Signed distance of each variable outside its bounds; positive values
    /// are violations.
    pub fn bound_excess(&self, x: &[f64]) -> Result<Vec<f64>, NlpError> {
        self.check_len(x)?;
        Ok(x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&v, (&lo, &hi))| (v - hi).max(lo - v))
            .collect())
    }

    pub fn eval_cost(&self, x: &[f64]) -> Result<f64, NlpError> {
        self.check_len(x)?;
        Ok(self.cost_unchecked(x))
    }

    fn cost_unchecked(&self, x: &[f64]) -> f64 {
        match self.layout.mode {
            Mode::Embodied => (0..self.n_fe()).map(|i| x[self.layout.dt(i)]).sum(),
            Mode::Naive => self.n_fe() as f64 * x[self.layout.dt(0)],
        }
    }

    pub fn eval_constraints(&self, x: &[f64]) -> Result<Vec<ConstraintValue>, NlpError> {
        self.check_len(x)?;
        let values = self.constraints_unchecked(x);
        let mut out = Vec::with_capacity(values.len());
        for b in &self.blocks {
            for r in 0..b.rows {
                out.push(ConstraintValue {
                    tag: b.tag,
                    index: b.index,
                    obstacle: b.obstacle,
                    kind: b.kind,
                    value: values[b.first_row + r],
                });
            }
        }
        Ok(out)
    }

    fn constraints_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.kinds.len()];
        let mut local = Vec::with_capacity(2 * STATE_DIM + 1);
        for b in &self.blocks {
            local.clear();
            local.extend(b.support.iter().map(|&j| x[j]));
            self.eval_block(b, &local, &mut out[b.first_row..b.first_row + b.rows]);
        }
        out
    }

    fn eval_block(&self, b: &Block, z: &[f64], out: &mut [f64]) {
        let p = &self.params;
        match b.tag {
            Tag::StartState | Tag::GoalState => {
                let target = state_values(if b.tag == Tag::StartState { &self.start } else { &self.goal });
                for k in 0..STATE_DIM {
                    out[k] = z[k] - target[k];
                }
            }
            Tag::Dynamics => {
                let (s, dt) = (state_of(z), z[5]);
                let next = if self.options.euler {
                    let (sin, cos) = s.theta.sin_cos();
                    Pose::new(
                        s.x + s.v * cos * dt,
                        s.y + s.v * sin * dt,
                        s.theta + s.v * curvature(s.phi, p.wheelbase) * dt,
                    )
                } else {
                    advance_pose(s.pose(), curvature(s.phi, p.wheelbase), s.v * dt)
                };
                out[0] = z[6] - next.x;
                out[1] = z[7] - next.y;
                out[2] = z[8] - next.theta;
            }
            Tag::RateLimit => {
                let dt = z[5];
                let dv = z[9] - z[3];
                let dphi = z[10] - z[4];
                out[0] = dv - p.a_max * dt;
                out[1] = p.a_min * dt - dv;
                out[2] = dphi - p.omega_max * dt;
                out[3] = -dphi - p.omega_max * dt;
            }
            Tag::Prerequisite => {
                let kappa = curvature(z[4], p.wheelbase);
                out.copy_from_slice(&prerequisite_slacks(kappa, z[3] * z[5], p, 1.0));
            }
            Tag::CollisionBox | Tag::CollisionFootprint => {
                let s = state_of(z);
                let corners = if b.tag == Tag::CollisionBox {
                    let ext = extents_unchecked(curvature(s.phi, p.wheelbase), s.v * z[5], p);
                    embodied_corners(s.pose(), p, &ext)
                } else {
                    footprint_corners(s.pose(), p)
                };
                let j = b.obstacle.expect("collision block without obstacle");
                self.collision_rows(&corners, j, out);
            }
        }
    }

    /// Triangle-area tests of the rectangle against obstacle `j` in both
    /// directions, as `margin - excess ≤ 0`.
    fn collision_rows(&self, corners: &[Point2; 4], j: usize, out: &mut [f64]) {
        let ring = [corners[0], corners[3], corners[2], corners[1]];
        let obs = self.obstacles[j].vertices();
        let eps = self.options.collision_margin;
        for (k, c) in ring.iter().enumerate() {
            out[k] = eps - signed_outside_margin(*c, obs);
        }
        for (k, v) in obs.iter().enumerate() {
            out[4 + k] = eps - signed_outside_margin(*v, &ring);
        }
    }

    fn block_jacobian(&self, b: &Block, z: &[f64], out: &mut Vec<Vec<f64>>) {
        let p = &self.params;
        let m = b.support.len();
        for row in out.iter_mut() {
            row.clear();
            row.resize(m, 0.0);
        }
        match b.tag {
            Tag::StartState | Tag::GoalState => {
                for k in 0..STATE_DIM {
                    out[k][k] = 1.0;
                }
            }
            Tag::RateLimit => {
                out[0][9] = 1.0;
                out[0][3] = -1.0;
                out[0][5] = -p.a_max;
                out[1][9] = -1.0;
                out[1][3] = 1.0;
                out[1][5] = p.a_min;
                out[2][10] = 1.0;
                out[2][4] = -1.0;
                out[2][5] = -p.omega_max;
                out[3][10] = -1.0;
                out[3][4] = 1.0;
                out[3][5] = -p.omega_max;
            }
            _ => {
                let mut y = z.to_vec();
                let mut plus = vec![0.0; b.rows];
                let mut minus = vec![0.0; b.rows];
                for k in 0..m {
                    let h = self.fd_step * z[k].abs().max(1.0);
                    y[k] = z[k] + h;
                    self.eval_block(b, &y, &mut plus);
                    y[k] = z[k] - h;
                    self.eval_block(b, &y, &mut minus);
                    y[k] = z[k];
                    for r in 0..b.rows {
                        out[r][k] = (plus[r] - minus[r]) / (2.0 * h);
                    }
                }
            }
        }
    }

    /// Central-difference Jacobian of every block, ignoring analytic forms.
    pub fn jacobian_fd(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut rows = Vec::with_capacity(self.kinds.len());
        for b in &self.blocks {
            let z: Vec<f64> = b.support.iter().map(|&j| x[j]).collect();
            let mut block = vec![vec![0.0; b.support.len()]; b.rows];
            let mut y = z.clone();
            let mut plus = vec![0.0; b.rows];
            let mut minus = vec![0.0; b.rows];
            for k in 0..z.len() {
                let h = self.fd_step * z[k].abs().max(1.0);
                y[k] = z[k] + h;
                self.eval_block(b, &y, &mut plus);
                y[k] = z[k] - h;
                self.eval_block(b, &y, &mut minus);
                y[k] = z[k];
                for r in 0..b.rows {
                    block[r][k] = (plus[r] - minus[r]) / (2.0 * h);
                }
            }
            rows.extend(block);
        }
        rows
    }

    /// Whether a block's Jacobian is provided in closed form.
    pub fn has_analytic_rows(&self) -> Vec<bool> {
        self.blocks
            .iter()
            .flat_map(|b| {
                let analytic = matches!(b.tag, Tag::StartState | Tag::GoalState | Tag::RateLimit);
                std::iter::repeat(analytic).take(b.rows)
            })
            .collect()
    }

    pub fn cost_gradient_analytic(&self) -> Vec<f64> {
        let mut g = vec![0.0; self.n_vars()];
        match self.layout.mode {
            Mode::Embodied => (0..self.n_fe()).for_each(|i| g[self.layout.dt(i)] = 1.0),
            Mode::Naive => g[self.layout.dt(0)] = self.n_fe() as f64,
        }
        g
    }
}

impl Problem for NlpProblem {
    fn dimension(&self) -> usize {
        self.n_vars()
    }

    fn lower_bounds(&self) -> &[f64] {
        &self.lower
    }

    fn upper_bounds(&self) -> &[f64] {
        &self.upper
    }

    fn kinds(&self) -> &[ConstraintKind] {
        &self.kinds
    }

    fn cost(&self, x: &[f64]) -> f64 {
        self.cost_unchecked(x)
    }

    fn constraints(&self, x: &[f64]) -> Vec<f64> {
        self.constraints_unchecked(x)
    }

    fn cost_gradient(&self, _x: &[f64]) -> Vec<f64> {
        self.cost_gradient_analytic()
    }

    fn jacobian_structure(&self) -> Vec<Vec<usize>> {
        self.blocks.iter().flat_map(|b| std::iter::repeat(b.support.clone()).take(b.rows)).collect()
    }

    fn jacobian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut rows = Vec::with_capacity(self.kinds.len());
        for b in &self.blocks {
            let z: Vec<f64> = b.support.iter().map(|&j| x[j]).collect();
            let mut block = vec![Vec::new(); b.rows];
            self.block_jacobian(b, &z, &mut block);
            rows.extend(block);
        }
        rows
    }
}
