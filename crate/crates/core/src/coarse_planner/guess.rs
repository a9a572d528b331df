//! Greedy thinning of a dense coarse trajectory into the warm start.

use crate::embodied_box::prerequisites;
use crate::error::PlanError;
use crate::geometry::VehicleParams;
use crate::kinematics::{steering_for_curvature, State, TimedState};

use super::velocity::interpolate;
use super::{CoarseTrajectory, CoarseWaypoint, InitialGuess};

const TIME_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuessOptions {
    pub lambda: f64,
    pub dt_max: f64,
    /// Test each candidate with the largest curvature magnitude met since the
    /// anchor instead of the anchor's own curvature.
    pub conservative_curvature: bool,
}

/// Scan with the anchor's curvature; see [`form_initial_guess_with`].
pub fn form_initial_guess(
    coarse: &CoarseTrajectory,
    lambda: f64,
    dt_max: f64,
    params: &VehicleParams,
) -> Result<InitialGuess, PlanError> {
    form_initial_guess_with(coarse, GuessOptions { lambda, dt_max, conservative_curvature: false }, params)
}

/// Keeps a subsequence of the dense waypoints such that each kept pair passes
/// the `lambda`-tightened prerequisites, evaluated with the first waypoint's
/// curvature and its speed times the elapsed time, and spans at most
/// `dt_max`. Each segment is extended as far as the test allows.
pub fn form_initial_guess_with(
    coarse: &CoarseTrajectory,
    opts: GuessOptions,
    params: &VehicleParams,
) -> Result<InitialGuess, PlanError> {
    if !(opts.lambda > 0.0 && opts.lambda < 1.0) {
        return Err(PlanError::InvalidInput(format!("lambda {} not in (0, 1)", opts.lambda)));
    }
    if !(opts.dt_max > 0.0) {
        return Err(PlanError::InvalidInput(format!("dt_max {} must be positive", opts.dt_max)));
    }
    let w = &coarse.waypoints;
    if w.len() < 2 {
        return Err(PlanError::GuessDegenerate(w.len()));
    }
    let passes = |a: usize, k: usize| {
        let anchor = &w[a];
        let elapsed = w[k].t - anchor.t;
        if elapsed > opts.dt_max + TIME_SLACK {
            return false;
        }
        let kappa = if opts.conservative_curvature {
            w[a..k].iter().map(|p| p.kappa.abs()).fold(0.0, f64::max)
        } else {
            anchor.kappa
        };
        prerequisites(kappa, anchor.v * elapsed, params, opts.lambda).ok
    };
    let mut kept = vec![0usize];
    let mut a = 0usize;
    while a < w.len() - 1 {
        let mut k = a + 1;
        while k < w.len() && passes(a, k) {
            k += 1;
        }
        // `k - 1` is the last passing candidate; a dense trajectory always
        // lets the first one through, and it is taken regardless.
        let next = (k - 1).max(a + 1);
        kept.push(next);
        a = next;
    }
    if kept.len() < 3 {
        return Err(PlanError::GuessDegenerate(kept.len()));
    }
    let anchors: Vec<CoarseWaypoint> = kept.iter().map(|&i| w[i]).collect();
    Ok(guess_from_anchors(anchors, params))
}

/// Held-state encoding of a waypoint sequence: each interval gets the average
/// speed and the curvature that reproduces its heading change.
pub fn guess_from_anchors(anchors: Vec<CoarseWaypoint>, params: &VehicleParams) -> InitialGuess {
    let n = anchors.len();
    let mut states = Vec::with_capacity(n);
    for (i, a) in anchors.iter().enumerate() {
        let (v, phi) = if i + 1 < n {
            let b = &anchors[i + 1];
            let ds = b.s - a.s;
            let dt = b.t - a.t;
            let v = if dt > 0.0 { (ds / dt).clamp(0.0, params.v_max) } else { a.v };
            let kappa = if ds > 1e-9 { (b.pose.theta - a.pose.theta) / ds } else { a.kappa };
            let phi = steering_for_curvature(kappa, params.wheelbase).clamp(-params.phi_max, params.phi_max);
            (v, phi)
        } else {
            (a.v, a.phi)
        };
        states.push(TimedState::new(a.t, State::new(a.pose.x, a.pose.y, a.pose.theta, v, phi)));
    }
    InitialGuess { anchors, states }
}

/// Warm start sampled at the given instants, for equidistant collocation.
pub fn guess_from_times(coarse: &CoarseTrajectory, times: &[f64], params: &VehicleParams) -> InitialGuess {
    let anchors = times.iter().map(|&t| interpolate(coarse, t)).collect();
    guess_from_anchors(anchors, params)
}

impl InitialGuess {
    /// Pins the first state to `start` and the last to `goal`, with the goal
    /// heading unwrapped next to the guessed final heading.
    pub fn with_boundary(mut self, start: State, goal: State) -> Self {
        if let Some(first) = self.states.first_mut() {
            first.state = start;
            if self.states.len() == 1 {
                return self;
            }
        }
        if let Some(last) = self.states.last_mut() {
            last.state = unwrap_goal(goal, last.state.theta);
        }
        self
    }
}

/// `goal` with its heading shifted by a multiple of 2π to lie within π of
/// `reference`.
pub fn unwrap_goal(goal: State, reference: f64) -> State {
    let two_pi = 2.0 * std::f64::consts::PI;
    let k = ((reference - goal.theta) / two_pi).round();
    State { theta: goal.theta + k * two_pi, ..goal }
}
