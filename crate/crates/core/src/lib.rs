//! Collision-free trajectory planning for car-like vehicles with collocation
//! constraints that stay valid between collocation points.
//!
//! The pipeline runs a coarse kinematic search, attaches a time-optimal speed
//! profile, thins the result into a non-uniform initial guess, and solves a
//! free-time transcription in which each collocation footprint is enlarged
//! into an *embodied box* covering the motion up to the next collocation
//! point. Every result is certified by dense continuous-time sampling.


pub mod coarse_planner;
pub mod embodied_box;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod kinematics;
pub mod solver;
pub mod swept_oracle;
pub mod trajectory_nlp;


pub use embodied_box::{BoxExtents, PrereqReport, SweepBounds};
pub use error::{GeometryError, NlpError, OracleError, PipelineError, PlanError, ScenarioError};
pub use geometry::{ConvexPolygon, Point2, Pose, VehicleParams};
pub use kinematics::{Control, State, TimedState};
