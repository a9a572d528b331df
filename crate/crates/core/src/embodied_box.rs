//! Embodied boxes: footprint enlargements that cover the region swept by the
//! vehicle between two collocation instants, together with the conditions
//! under which that covering is guaranteed.
//!
//! All formulas assume forward motion (`s >= 0`) with speed and steering held
//! constant over the interval, i.e. motion along a circular arc of signed
//! curvature `kappa` and length `s`. The swept-region bounds are expressed in
//! the normalized frame where the interval starts with the rear axle at the
//! origin and the vehicle heading along +y.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::PrereqViolation;
use crate::geometry::VehicleParams;

/// Curvatures below this magnitude are evaluated as exactly straight.
pub const ZERO_CURVATURE: f64 = 1e-12;

/// Enlargement of the footprint on each side, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BoxExtents {
    pub e_left: f64,
    pub e_right: f64,
    pub e_up: f64,
    pub e_down: f64,
}

/// Axis-aligned bounds of the swept region in the normalized frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepBounds {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

/// The three validity conditions of the embodied-box formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Prereq {
    /// Total heading change stays within a quarter turn.
    QuarterTurn,
    /// Forward extent stays monotone over the interval.
    ForwardMonotone,
    /// Lateral extent stays monotone over the interval.
    LateralMonotone,
}

impl Prereq {
    pub const ALL: [Prereq; 3] = [Prereq::QuarterTurn, Prereq::ForwardMonotone, Prereq::LateralMonotone];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrereqReport {
    pub ok: bool,
    pub violated: Vec<Prereq>,
    /// `lhs - rhs` in [`Prereq::ALL`] order; each is `<= 0` when satisfied.
    pub slacks: [f64; 3],
}

/// Whether the vehicle geometry keeps the turning center outside the body,
/// which the embodied-box formulas rely on.
pub fn check_vehicle_admissible(params: &VehicleParams) -> bool {
    2.0 * params.wheelbase > params.width * params.phi_max.tan()
}

/// Past this argument `tan` is continued linearly so slack values stay
/// finite and monotone for any iterate an optimizer may visit.
const TAN_LINEAR_FROM: f64 = 1.5;

fn tan_extended(arg: f64) -> f64 {
    if arg < TAN_LINEAR_FROM {
        arg.tan()
    } else {
        let t = TAN_LINEAR_FROM.tan();
        t + (arg - TAN_LINEAR_FROM) * (1.0 + t * t)
    }
}

/// Raw `lhs - rhs` values of the three prerequisites with right-hand sides
/// scaled by `lambda`.
pub fn prerequisite_slacks(kappa: f64, s: f64, params: &VehicleParams, lambda: f64) -> [f64; 3] {
    let k = kappa.abs();
    if k < ZERO_CURVATURE {
        return [-lambda * FRAC_PI_2, -lambda, 0.0];
    }
    let turn = k * s;
    let t = tan_extended(turn);
    let lateral = 1.0 + params.half_width() * k;
    [
        turn - lambda * FRAC_PI_2,
        k * params.front_length * t - lambda * lateral,
        lateral * t - lambda * params.rear_length * k,
    ]
}

/// Evaluates the prerequisites for an interval with curvature `kappa` and arc
/// length `s`; `lambda = 1` gives the nominal conditions, smaller values
/// tighten them.
pub fn prerequisites(kappa: f64, s: f64, params: &VehicleParams, lambda: f64) -> PrereqReport {
    let slacks = prerequisite_slacks(kappa, s, params, lambda);
    let violated: Vec<Prereq> = Prereq::ALL
        .iter()
        .zip(slacks)
        .filter(|(_, slack)| *slack > 0.0)
        .map(|(p, _)| *p)
        .collect();
    PrereqReport { ok: violated.is_empty(), violated, slacks }
}

/// Extents without checking the prerequisites. Optimizers need the formula
/// at every iterate, valid or not.
pub fn extents_unchecked(kappa: f64, s: f64, params: &VehicleParams) -> BoxExtents {
    let turn = kappa * s;
    let rear = params.rear_length * turn;
    let front = (params.front_length + 0.5 * s) * turn;
    BoxExtents {
        e_left: (-rear).max(front),
        e_right: rear.max(-front),
        e_up: s + params.half_width() * kappa.abs() * s,
        e_down: 0.0,
    }
}

fn require_prerequisites(kappa: f64, s: f64, params: &VehicleParams) -> Result<(), PrereqViolation> {
    let report = prerequisites(kappa, s, params, 1.0);
    if report.ok {
        Ok(())
    } else {
        Err(PrereqViolation { kappa, arc_length: s, report })
    }
}

/// Footprint enlargement that covers the swept region of one interval.
pub fn extents(kappa: f64, s: f64, params: &VehicleParams) -> Result<BoxExtents, PrereqViolation> {
    require_prerequisites(kappa, s, params)?;
    Ok(extents_unchecked(kappa, s, params))
}

pub fn sweep_bounds_unchecked(kappa: f64, s: f64, params: &VehicleParams) -> SweepBounds {
    let e = extents_unchecked(kappa, s, params);
    let hw = params.half_width();
    SweepBounds {
        x_min: -hw - e.e_left,
        x_max: hw + e.e_right,
        y_min: -params.rear_length - e.e_down,
        y_max: params.front_length + e.e_up,
    }
}

/// Swept-region bounds in the normalized frame.
pub fn sweep_bounds(kappa: f64, s: f64, params: &VehicleParams) -> Result<SweepBounds, PrereqViolation> {
    require_prerequisites(kappa, s, params)?;
    Ok(sweep_bounds_unchecked(kappa, s, params))
}
