//! Naive-baseline escalation and the seeded growth-rate experiment.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coarse_planner::footprint_free;
use crate::error::PipelineError;
use crate::geometry::Pose;
use crate::kinematics::{advance_pose, State};
use crate::trajectory_nlp::Mode;

use super::pipeline::{plan_from_seed, prepare, RunMetrics, Seed};
use super::scenario::Scenario;

const LEAD_STEP: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Escalation {
    /// Smallest tried `N_fe` that was solver-feasible and oracle-safe.
    pub n_safe: usize,
    /// One entry per tried `N_fe`, in order.
    pub trail: Vec<RunMetrics>,
}

/// Naive planning at `N = n_start, n_start + 1, …` until a run is both
/// solver-feasible and oracle-safe.
pub fn naive_escalation(scenario: &Scenario, n_start: usize, n_max: usize) -> Result<Escalation, PipelineError> {
    let seed = prepare(scenario)?;
    naive_escalation_from_seed(scenario, &seed, n_start, n_max)
}

pub fn naive_escalation_from_seed(
    scenario: &Scenario,
    seed: &Seed,
    n_start: usize,
    n_max: usize,
) -> Result<Escalation, PipelineError> {
    if n_start < 2 || n_max < n_start {
        return Err(PipelineError::Coarse(crate::error::PlanError::InvalidInput(format!(
            "escalation range {n_start}..={n_max} is empty or starts below 2"
        ))));
    }
    let mut trail = Vec::new();
    for n in n_start..=n_max {
        let outcome = plan_from_seed(scenario, seed, Mode::Naive, Some(n))?;
        let ok = outcome.metrics.success();
        trail.push(outcome.metrics);
        if ok {
            return Ok(Escalation { n_safe: n, trail });
        }
    }
    Err(PipelineError::NotSafeWithinBudget { start: n_start, max: n_max })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GrowthOptions {
    pub n_tasks: usize,
    pub seed: u64,
    /// Clearance between a sampled footprint and obstacles or walls, m.
    pub clearance: f64,
    /// Straight run, in minimum turning radii, kept free ahead of a start
    /// pose and behind a goal pose.
    pub lead: f64,
    /// Minimum start–goal distance, m.
    pub min_separation: f64,
    /// Rejection-sampling attempts per pose.
    pub max_attempts: usize,
    /// Escalation starts at `⌈N_proposed / start_divisor⌉`.
    pub start_divisor: usize,
    /// Escalation stops at `budget_factor · N_proposed`.
    pub budget_factor: usize,
}

impl Default for GrowthOptions {
    fn default() -> Self {
        Self {
            n_tasks: 10,
            seed: 0,
            clearance: 0.5,
            lead: 1.0,
            min_separation: 10.0,
            max_attempts: 100_000,
            start_divisor: 2,
            budget_factor: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub index: usize,
    pub start: State,
    pub goal: State,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskRate {
    pub index: usize,
    pub n_proposed: usize,
    pub n_naive: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskFailure {
    pub index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthRateResult {
    pub lambda: f64,
    pub seed: u64,
    pub tasks: Vec<TaskRate>,
    /// Mean of `tasks[..].rate`; absent when every task failed.
    pub average_rate: Option<f64>,
    pub failures: Vec<TaskFailure>,
}

impl GrowthRateResult {
    pub fn failure_count(&self) -> usize {
        self.failures.len()
    }
}

/// `(N_naive − N_proposed) / N_proposed`.
pub fn growth_rate(n_proposed: usize, n_naive: usize) -> f64 {
    (n_naive as f64 - n_proposed as f64) / n_proposed as f64
}

fn lead_free(pose: Pose, direction: f64, scenario: &Scenario, opts: &GrowthOptions) -> bool {
    let run = opts.lead / scenario.vehicle.max_curvature();
    let steps = (run / LEAD_STEP).ceil().max(1.0) as usize;
    (1..=steps).all(|k| {
        let p = advance_pose(pose, 0.0, direction * run * k as f64 / steps as f64);
        footprint_free(p, &scenario.vehicle, 0.0, &scenario.workspace, &scenario.obstacles)
    })
}

/// Rejection-samples a pose whose footprint keeps `opts.clearance` and has a
/// free straight run ahead (`direction = 1`) or behind (`-1`).
fn sample_pose(rng: &mut ChaCha8Rng, scenario: &Scenario, opts: &GrowthOptions, direction: f64) -> Option<State> {
    let ws = &scenario.workspace;
    for _ in 0..opts.max_attempts {
        let x = rng.gen_range(ws.x_min..ws.x_max);
        let y = rng.gen_range(ws.y_min..ws.y_max);
        let theta = rng.gen_range(-PI..PI);
        let s = State::new(x, y, theta, 0.0, 0.0);
        if footprint_free(s.pose(), &scenario.vehicle, opts.clearance, ws, &scenario.obstacles)
            && lead_free(s.pose(), direction, scenario, opts)
        {
            return Some(s);
        }
    }
    None
}

/// Random start/goal pairs drawn with ChaCha8 seeded by `opts.seed`.
pub fn random_tasks(scenario: &Scenario, opts: &GrowthOptions) -> Result<Vec<Task>, PipelineError> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let exhausted = || {
        PipelineError::Coarse(crate::error::PlanError::InvalidInput(format!(
            "no admissible pose after {} attempts",
            opts.max_attempts
        )))
    };
    let mut tasks = Vec::with_capacity(opts.n_tasks);
    for index in 0..opts.n_tasks {
        let start = sample_pose(&mut rng, scenario, opts, 1.0).ok_or_else(exhausted)?;
        let mut goal = None;
        for _ in 0..opts.max_attempts {
            let g = sample_pose(&mut rng, scenario, opts, -1.0).ok_or_else(exhausted)?;
            if g.pose().position().distance(start.pose().position()) >= opts.min_separation {
                goal = Some(g);
                break;
            }
        }
        tasks.push(Task { index, start, goal: goal.ok_or_else(exhausted)? });
    }
    Ok(tasks)
}

fn run_task(base: &Scenario, task: &Task, lambda: f64, opts: &GrowthOptions) -> Result<TaskRate, String> {
    let scenario = base
        .with_endpoints(task.start, task.goal)
        .and_then(|s| s.with_lambda(lambda))
        .map_err(|e| e.to_string())?;
    let seed = prepare(&scenario).map_err(|e| e.to_string())?;
    let embodied = plan_from_seed(&scenario, &seed, Mode::Embodied, None).map_err(|e| e.to_string())?;
    let m = &embodied.metrics;
    if !m.success() {
        return Err(format!("embodied run not certified ({:?}, safe={})", m.solver_status, m.safe));
    }
    let n_proposed = m.n_fe;
    let n_start = n_proposed.div_ceil(opts.start_divisor.max(1)).max(2);
    let n_max = (opts.budget_factor * n_proposed).max(n_start);
    let esc = naive_escalation_from_seed(&scenario, &seed, n_start, n_max).map_err(|e| e.to_string())?;
    Ok(TaskRate { index: task.index, n_proposed, n_naive: esc.n_safe, rate: growth_rate(n_proposed, esc.n_safe) })
}

/// One result per entry of `lambdas`, all over the same random tasks.
pub fn growth_rate_experiment(
    base: &Scenario,
    lambdas: &[f64],
    opts: &GrowthOptions,
) -> Result<Vec<GrowthRateResult>, PipelineError> {
    if opts.n_tasks == 0 {
        return Err(PipelineError::Coarse(crate::error::PlanError::InvalidInput("n_tasks must be at least 1".into())));
    }
    for &l in lambdas {
        base.with_lambda(l)?;
    }
    let tasks = random_tasks(base, opts)?;
    Ok(lambdas
        .iter()
        .map(|&lambda| {
            let mut result =
                GrowthRateResult { lambda, seed: opts.seed, tasks: Vec::new(), average_rate: None, failures: Vec::new() };
            for task in &tasks {
                match run_task(base, task, lambda, opts) {
                    Ok(r) => result.tasks.push(r),
                    Err(reason) => result.failures.push(TaskFailure { index: task.index, reason }),
                }
            }
            if !result.tasks.is_empty() {
                result.average_rate =
                    Some(result.tasks.iter().map(|t| t.rate).sum::<f64>() / result.tasks.len() as f64);
            }
            result
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::scenario::parse_scenario;

    fn open_field() -> Scenario {
        parse_scenario(
            r#"{
            "format_version": 1,
            "name": "open",
            "workspace": {"x_min": 0, "x_max": 30, "y_min": 0, "y_max": 30},
            "obstacles": [[[12, 12], [18, 12], [18, 18], [12, 18]]],
            "start": {"x": 3, "y": 3, "theta": 0, "v": 0, "phi": 0},
            "goal": {"x": 25, "y": 3, "theta": 0, "v": 0, "phi": 0}
        }"#,
        )
        .unwrap()
    }

    #[test]
    fn rate_definition() {
        assert_eq!(growth_rate(90, 137), 47.0 / 90.0);
        assert_eq!(growth_rate(10, 10), 0.0);
        assert_eq!(growth_rate(10, 5), -0.5);
    }

    #[test]
    fn tasks_are_seeded_and_clear() {
        let s = open_field();
        let opts = GrowthOptions { n_tasks: 6, seed: 42, ..Default::default() };
        let a = random_tasks(&s, &opts).unwrap();
        assert_eq!(a, random_tasks(&s, &opts).unwrap());
        assert_ne!(a, random_tasks(&s, &GrowthOptions { seed: 43, ..opts }).unwrap());
        for t in &a {
            assert!(t.start.pose().position().distance(t.goal.pose().position()) >= 10.0);
            for p in [t.start, t.goal] {
                assert!(footprint_free(p.pose(), &s.vehicle, 0.5, &s.workspace, &s.obstacles));
            }
        }
    }

    #[test]
    fn escalation_range_is_checked() {
        let s = open_field();
        assert!(naive_escalation(&s, 1, 5).is_err());
        assert!(naive_escalation(&s, 6, 5).is_err());
    }

    #[test]
    fn obstacle_free_first_try_is_safe() {
        let s = parse_scenario(
            r#"{
            "format_version": 1,
            "name": "empty",
            "workspace": {"x_min": -5, "x_max": 5, "y_min": -5, "y_max": 15},
            "obstacles": [],
            "start": {"x": 0, "y": 0, "theta": 1.5707963267948966, "v": 0, "phi": 0},
            "goal": {"x": 0, "y": 10, "theta": 1.5707963267948966, "v": 0, "phi": 0}
        }"#,
        )
        .unwrap();
        let esc = naive_escalation(&s, 4, 10).unwrap();
        assert_eq!(esc.n_safe, 4);
        assert_eq!(esc.trail.len(), 1);
    }
}
