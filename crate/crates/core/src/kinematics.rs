//! Single-track bicycle model and its closed-form solution under held speed
//! and steering.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::geometry::{footprint_corners, Corners, Point2, Pose, VehicleParams};

/// Below this curvature magnitude the arc is evaluated with a Taylor series.
pub const STRAIGHT_CURVATURE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v: f64,
    pub phi: f64,
}

impl State {
    pub const fn new(x: f64, y: f64, theta: f64, v: f64, phi: f64) -> Self {
        Self { x, y, theta, v, phi }
    }

    pub fn pose(&self) -> Pose {
        Pose::new(self.x, self.y, self.theta)
    }

    pub fn with_pose(self, pose: Pose) -> Self {
        Self { x: pose.x, y: pose.y, theta: pose.theta, ..self }
    }

    pub fn curvature(&self, params: &VehicleParams) -> f64 {
        curvature(self.phi, params.wheelbase)
    }

    pub fn is_finite(&self) -> bool {
        [self.x, self.y, self.theta, self.v, self.phi].iter().all(|c| c.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Control {
    /// Longitudinal acceleration.
    pub a: f64,
    /// Steering angle rate.
    pub omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TimedState {
    pub t: f64,
    pub state: State,
}

impl TimedState {
    pub const fn new(t: f64, state: State) -> Self {
        Self { t, state }
    }
}

/// Signed path curvature produced by steering angle `phi`.
pub fn curvature(phi: f64, wheelbase: f64) -> f64 {
    phi.tan() / wheelbase
}

/// Inverse of [`curvature`].
pub fn steering_for_curvature(kappa: f64, wheelbase: f64) -> f64 {
    (kappa * wheelbase).atan()
}

/// Displacement along a circular arc of signed curvature `kappa` and length
/// `s`, expressed in the start frame as (forward, left, heading change).
pub fn arc_displacement(kappa: f64, s: f64) -> (f64, f64, f64) {
    let turn = kappa * s;
    if kappa.abs() < STRAIGHT_CURVATURE {
        (s, 0.5 * turn * s, turn)
    } else {
        let half = 0.5 * turn;
        (turn.sin() / kappa, 2.0 * half.sin() * half.sin() / kappa, turn)
    }
}

/// Advances a pose along an arc of curvature `kappa` by arc length `s`.
pub fn advance_pose(pose: Pose, kappa: f64, s: f64) -> Pose {
    let (fwd, left, turn) = arc_displacement(kappa, s);
    let (sin, cos) = pose.theta.sin_cos();
    Pose::new(
        pose.x + fwd * cos - left * sin,
        pose.y + fwd * sin + left * cos,
        pose.theta + turn,
    )
}

/// Exact motion over `dt` with `v` and `phi` held at their start values.
/// Heading is not wrapped.
pub fn propagate_arc(start: State, dt: f64, wheelbase: f64) -> State {
    let kappa = curvature(start.phi, wheelbase);
    start.with_pose(advance_pose(start.pose(), kappa, start.v * dt))
}

/// Right-hand side of the bicycle model as (ẋ, ẏ, v̇, φ̇, θ̇).
pub fn state_derivative(s: &State, u: &Control, wheelbase: f64) -> [f64; 5] {
    [
        s.v * s.theta.cos(),
        s.v * s.theta.sin(),
        u.a,
        u.omega,
        s.v * s.phi.tan() / wheelbase,
    ]
}

/// One explicit Euler step of the bicycle model with zero control input.
pub fn euler_step(start: State, dt: f64, wheelbase: f64) -> State {
    let d = state_derivative(&start, &Control::default(), wheelbase);
    State {
        x: start.x + d[0] * dt,
        y: start.y + d[1] * dt,
        theta: start.theta + d[4] * dt,
        ..start
    }
}

/// Pose at which the swept-region analysis is carried out: rear axle at the
/// origin, heading along +y.
pub const NORMALIZED_START: Pose = Pose::new(0.0, 0.0, FRAC_PI_2);

/// Footprint corners A, B, C, D at time `t` after leaving the normalized
/// start pose with speed `v` and curvature `kappa`.
pub fn vertex_trajectory(v: f64, kappa: f64, t: f64, params: &VehicleParams) -> Corners {
    let turn = v * kappa * t;
    let (sin, cos) = turn.sin_cos();
    let (x, y) = if kappa.abs() < STRAIGHT_CURVATURE {
        let s = v * t;
        (-0.5 * s * s * kappa, s)
    } else {
        let half = 0.5 * turn;
        (-2.0 * half.sin() * half.sin() / kappa, sin / kappa)
    };
    let lf = params.front_length;
    let lr = params.rear_length;
    let hw = params.half_width();
    [
        Point2::new(x - lf * sin - hw * cos, y + lf * cos - hw * sin),
        Point2::new(x - lf * sin + hw * cos, y + lf * cos + hw * sin),
        Point2::new(x + lr * sin + hw * cos, y - lr * cos + hw * sin),
        Point2::new(x + lr * sin - hw * cos, y - lr * cos - hw * sin),
    ]
}

/// Footprint corners at time `t` for motion from an arbitrary start state.
pub fn corners_at(start: &State, t: f64, params: &VehicleParams) -> Corners {
    footprint_corners(propagate_arc(*start, t, params.wheelbase).pose(), params)
}
