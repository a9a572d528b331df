use thiserror::Error;

use crate::embodied_box::PrereqReport;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("vertex {0} is not finite")]
    NonFiniteVertex(usize),
    #[error("vertices {0} and {1} coincide")]
    DuplicateVertex(usize, usize),
    #[error("polygon is not strictly convex at vertex {0}")]
    NotStrictlyConvex(usize),
    #[error("vehicle parameter `{name}` has invalid value {value}")]
    InvalidParameter { name: &'static str, value: f64 },
}

/// The embodied-box formulas were requested outside their validity envelope.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("embodied-box prerequisites violated for kappa={kappa}, s={arc_length}: {report:?}")]
pub struct PrereqViolation {
    pub kappa: f64,
    pub arc_length: f64,
    pub report: PrereqReport,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("malformed trajectory at index {index}: {reason}")]
    MalformedTrajectory { index: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("no collision-free coarse path found after expanding {expanded} nodes")]
    NoPathFound { expanded: usize },
    #[error("infeasible velocity profile: {0}")]
    InfeasibleProfile(String),
    #[error("initial guess degenerate: only {0} waypoints survived")]
    GuessDegenerate(usize),
    #[error("invalid planner input: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NlpError {
    #[error("scenario rejected: {0}")]
    ScenarioRejected(String),
    #[error("decision vector has length {got}, layout expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("could not read scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("could not parse scenario: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("scenario invalid ({invariant}): {detail}")]
    Validation { invariant: &'static str, detail: String },
}

/// Pipeline failure tagged with the stage that produced it.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("coarse planning: {0}")]
    Coarse(#[from] PlanError),
    #[error("problem construction: {0}")]
    Nlp(#[from] NlpError),
    #[error("certification: {0}")]
    Oracle(#[from] OracleError),
    #[error("naive planning never became safe in N_fe range {start}..={max}")]
    NotSafeWithinBudget { start: usize, max: usize },
    #[error("scenario: {0}")]
    Scenario(#[from] ScenarioError),
    #[error("export: {0}")]
    Io(#[from] std::io::Error),
}
