//! Coarse path → speed profile → warm start → transcription → solve →
//! certification.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::coarse_planner::{
    attach_velocity, form_initial_guess_with, guess_from_times, plan_coarse_path, resample_equidistant, CoarsePath,
    CoarseTrajectory, GuessOptions, InitialGuess,
};
use crate::error::{PipelineError, PlanError};
use crate::kinematics::TimedState;
use crate::solver::{solve, SolveReport, SolveStatus};
use crate::swept_oracle::{trajectory_safety_check, SafetyReport, DEFAULT_SAFETY_SAMPLES};
use crate::trajectory_nlp::{build_nlp, Mode, ProblemStats};

use super::scenario::Scenario;

/// Wall-clock seconds spent per stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimes {
    pub coarse_path: f64,
    pub velocity: f64,
    pub guess: f64,
    pub build: f64,
    pub solve: f64,
    pub certify: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub scenario: String,
    pub mode: Mode,
    pub n_fe: usize,
    /// Completion time of the returned trajectory, s.
    pub cost: f64,
    /// Dense-sampling verdict; never the solver's claim.
    pub safe: bool,
    /// Smallest sampled footprint clearance, m; absent without obstacles.
    pub min_clearance: Option<f64>,
    pub first_violation_time: Option<f64>,
    pub solver_status: SolveStatus,
    pub max_violation: f64,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub lambda: f64,
    pub seed: u64,
    pub problem: ProblemStats,
    pub timing: StageTimes,
}

impl RunMetrics {
    /// Feasible by the solver and safe by the oracle.
    pub fn success(&self) -> bool {
        self.safe && self.solver_status.is_feasible()
    }
}

#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub trajectory: Vec<TimedState>,
    pub guess: InitialGuess,
    pub report: SolveReport,
    pub safety: SafetyReport,
    pub metrics: RunMetrics,
}

/// Stages 1–4, shared by every mode and collocation count.
#[derive(Debug, Clone)]
pub struct Seed {
    pub path: CoarsePath,
    pub coarse: CoarseTrajectory,
    pub dense: CoarseTrajectory,
    /// Thinned warm start; its interval count is the embodied `N_fe`.
    pub guess: InitialGuess,
    pub timing: StageTimes,
}

pub fn prepare(scenario: &Scenario) -> Result<Seed, PipelineError> {
    let mut timing = StageTimes::default();
    let clock = Instant::now();
    let path = plan_coarse_path(scenario)?;
    timing.coarse_path = clock.elapsed().as_secs_f64();
    let clock = Instant::now();
    let coarse = attach_velocity(&path, &scenario.vehicle, scenario.start.v, scenario.goal.v)?;
    timing.velocity = clock.elapsed().as_secs_f64();
    let clock = Instant::now();
    let dense = resample_equidistant(&coarse, scenario.planner.dense_dt)?;
    let opts = GuessOptions {
        lambda: scenario.lambda,
        dt_max: scenario.dt_max,
        conservative_curvature: scenario.planner.conservative_curvature,
    };
    let guess = form_initial_guess_with(&dense, opts, &scenario.vehicle)?;
    timing.guess = clock.elapsed().as_secs_f64();
    Ok(Seed { path, coarse, dense, guess, timing })
}

/// Equidistant warm start with `n_fe` intervals.
pub fn equidistant_guess(seed: &Seed, scenario: &Scenario, n_fe: usize) -> Result<InitialGuess, PlanError> {
    if n_fe < 1 {
        return Err(PlanError::InvalidInput("N_fe must be at least 1".into()));
    }
    let total = seed.dense.duration();
    let times: Vec<f64> = (0..=n_fe).map(|k| total * k as f64 / n_fe as f64).collect();
    Ok(guess_from_times(&seed.dense, &times, &scenario.vehicle))
}

/// Full pipeline for one scenario and mode.
///
/// Embodied mode uses the thinned warm start unless `n_fe` overrides it with
/// an equidistant one; naive mode is always equidistant, with `N_fe` from the
/// override or from the embodied warm start.
pub fn plan(scenario: &Scenario, mode: Mode, n_fe: Option<usize>) -> Result<PlanOutcome, PipelineError> {
    let seed = prepare(scenario)?;
    plan_from_seed(scenario, &seed, mode, n_fe)
}

pub fn plan_from_seed(
    scenario: &Scenario,
    seed: &Seed,
    mode: Mode,
    n_fe: Option<usize>,
) -> Result<PlanOutcome, PipelineError> {
    let mut timing = seed.timing;
    let clock = Instant::now();
    let guess = match (mode, n_fe) {
        (Mode::Embodied, None) => seed.guess.clone(),
        (_, Some(n)) => equidistant_guess(seed, scenario, n)?,
        (Mode::Naive, None) => equidistant_guess(seed, scenario, seed.guess.n_fe())?,
    }
    .with_boundary(scenario.start, scenario.goal);
    timing.guess += clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let problem = build_nlp(scenario, &guess, mode)?;
    let x0 = problem.encode_guess(&guess)?;
    timing.build = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let (x, report) = solve(&problem, &x0, &scenario.solver).map_err(|e| {
        PipelineError::Nlp(crate::error::NlpError::DimensionMismatch { expected: e.expected, got: e.got })
    })?;
    timing.solve = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let trajectory = problem.decode_solution(&x)?;
    let safety = trajectory_safety_check(&trajectory, &scenario.obstacles, &scenario.vehicle, DEFAULT_SAFETY_SAMPLES)?;
    timing.certify = clock.elapsed().as_secs_f64();

    let metrics = RunMetrics {
        scenario: scenario.name.clone(),
        mode,
        n_fe: problem.n_fe(),
        cost: trajectory.last().map_or(0.0, |s| s.t),
        safe: safety.safe,
        min_clearance: safety.min_clearance.is_finite().then_some(safety.min_clearance),
        first_violation_time: safety.first_violation_time,
        solver_status: report.status,
        max_violation: report.max_violation,
        outer_iterations: report.outer_iterations,
        inner_iterations: report.inner_iterations,
        lambda: scenario.lambda,
        seed: scenario.seed,
        problem: problem.stats(),
        timing,
    };
    Ok(PlanOutcome { trajectory, guess, report, safety, metrics })
}
