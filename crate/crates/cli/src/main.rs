use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use embox::embodied_box::{extents_unchecked, prerequisites, sweep_bounds_unchecked};
use embox::error::PipelineError;
use embox::geometry::VehicleParams;
use embox::harness::experiments::{growth_rate_experiment, naive_escalation_from_seed, GrowthOptions};
use embox::harness::export::{export, parse_trajectory_csv};
use embox::harness::pipeline::{plan_from_seed, prepare, PlanOutcome};
use embox::harness::scenario::{load_scenario, Scenario};
use embox::kinematics::curvature;
use embox::swept_oracle::{trajectory_safety_check, DEFAULT_SAFETY_SAMPLES};
use embox::trajectory_nlp::Mode;

const EXIT_VALIDATION: u8 = 2;
const EXIT_PLANNING: u8 = 3;
const EXIT_UNSAFE: u8 = 4;

#[derive(Parser)]
#[command(name = "embox", version, about = "Embodied-box trajectory planning toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Overrides {
    /// Prerequisite slack in (0, 1) for the warm start.
    #[arg(long)]
    lambda: Option<f64>,
    /// Seed for the solver (and for task sampling in `growth`).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Plan a trajectory and print its metrics.
    Plan {
        scenario: PathBuf,
        #[arg(long, default_value = "embodied")]
        mode: Mode,
        /// Collocation intervals; equidistant warm start when given.
        #[arg(long)]
        nfe: Option<usize>,
        #[command(flatten)]
        overrides: Overrides,
        /// Also write trajectory.csv, metrics.json and plot.svg here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate a scenario, and certify a trajectory CSV against it if given.
    Check {
        scenario: PathBuf,
        trajectory: Option<PathBuf>,
    },
    /// Embodied-box extents and prerequisites for one interval.
    Box {
        /// Curvature, 1/m.
        #[arg(long, allow_hyphen_values = true, conflicts_with = "phi")]
        kappa: Option<f64>,
        /// Steering angle, rad.
        #[arg(long, allow_hyphen_values = true)]
        phi: Option<f64>,
        /// Arc length, m.
        #[arg(long, conflicts_with_all = ["v", "dt"])]
        s: Option<f64>,
        #[arg(long, requires = "dt")]
        v: Option<f64>,
        #[arg(long, requires = "v")]
        dt: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        /// Scenario supplying the vehicle; the passenger car otherwise.
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
    /// Naive planning with growing collocation counts until certified safe.
    Escalate {
        scenario: PathBuf,
        /// First count tried; the embodied count by default.
        #[arg(long)]
        nfe: Option<usize>,
        /// Last count tried.
        #[arg(long)]
        max: Option<usize>,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Collocation-count growth rate of naive over embodied on random tasks.
    Growth {
        scenario: PathBuf,
        #[arg(long, default_value_t = 10)]
        tasks: usize,
        /// Repeat for several values.
        #[arg(long = "lambda", default_values_t = [0.75])]
        lambdas: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plan and write trajectory.csv, metrics.json and plot.svg.
    Export {
        scenario: PathBuf,
        #[arg(long, default_value = "embodied")]
        mode: Mode,
        #[arg(long)]
        nfe: Option<usize>,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Validation(String),
    Planning(String),
    Unsafe(String),
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Scenario(_) => Failure::Validation(e.to_string()),
            _ => Failure::Planning(e.to_string()),
        }
    }
}

fn validation(e: impl std::fmt::Display) -> Failure {
    Failure::Validation(e.to_string())
}

fn load(path: &Path, o: Option<&Overrides>) -> Result<Scenario, Failure> {
    let mut s = load_scenario(path).map_err(validation)?;
    if let Some(o) = o {
        if let Some(l) = o.lambda {
            s = s.with_lambda(l).map_err(validation)?;
        }
        if let Some(seed) = o.seed {
            s.seed = seed;
            s.solver.seed = seed;
        }
    }
    Ok(s)
}

fn print_json(v: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn write_json(dir: &Path, name: &str, v: &impl serde::Serialize) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Planning(e.to_string()))?;
    let text = serde_json::to_string_pretty(v).expect("serializable") + "\n";
    fs::write(dir.join(name), text).map_err(|e| Failure::Planning(e.to_string()))
}

fn verdict(outcome: &PlanOutcome) -> Result<(), Failure> {
    let m = &outcome.metrics;
    if !m.solver_status.is_feasible() {
        Err(Failure::Planning(format!("solver returned {:?}", m.solver_status)))
    } else if !m.safe {
        Err(Failure::Unsafe(format!("trajectory collides at t = {:?}", m.first_violation_time)))
    } else {
        Ok(())
    }
}

fn run_plan(path: &Path, mode: Mode, nfe: Option<usize>, o: &Overrides, out: Option<&Path>) -> Result<(), Failure> {
    let scenario = load(path, Some(o))?;
    let seed = prepare(&scenario)?;
    let outcome = plan_from_seed(&scenario, &seed, mode, nfe)?;
    print_json(&outcome.metrics);
    if let Some(dir) = out {
        export(&scenario, &outcome.trajectory, &outcome.metrics, dir).map_err(|e| Failure::Planning(e.to_string()))?;
    }
    verdict(&outcome)
}

fn run(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Plan { scenario, mode, nfe, overrides, out } => {
            run_plan(&scenario, mode, nfe, &overrides, out.as_deref())
        }
        Command::Export { scenario, mode, nfe, overrides, out } => {
            run_plan(&scenario, mode, nfe, &overrides, Some(&out))
        }
        Command::Check { scenario, trajectory } => {
            let s = load(&scenario, None)?;
            let Some(csv) = trajectory else {
                print_json(&json!({
                    "scenario": s.name,
                    "valid": true,
                    "obstacles": s.obstacles.len(),
                    "lambda": s.lambda,
                    "lambda_defaulted": s.lambda_defaulted,
                }));
                return Ok(());
            };
            let text = fs::read_to_string(&csv).map_err(validation)?;
            let traj = parse_trajectory_csv(&text).map_err(validation)?;
            let report =
                trajectory_safety_check(&traj, &s.obstacles, &s.vehicle, DEFAULT_SAFETY_SAMPLES).map_err(validation)?;
            print_json(&report);
            if report.safe {
                Ok(())
            } else {
                Err(Failure::Unsafe(format!("trajectory collides at t = {:?}", report.first_violation_time)))
            }
        }
        Command::Box { kappa, phi, s, v, dt, lambda, scenario } => {
            let params = match scenario {
                Some(p) => load(&p, None)?.vehicle,
                None => VehicleParams::passenger_car(),
            };
            let kappa = match (kappa, phi) {
                (Some(k), _) => k,
                (None, Some(phi)) => curvature(phi, params.wheelbase),
                (None, None) => return Err(validation("one of --kappa or --phi is required")),
            };
            let s = match (s, v, dt) {
                (Some(s), _, _) => s,
                (None, Some(v), Some(dt)) => v * dt,
                _ => return Err(validation("give --s, or both --v and --dt")),
            };
            if !kappa.is_finite() || !s.is_finite() || s < 0.0 {
                return Err(validation(format!("need finite kappa and s >= 0, got kappa = {kappa}, s = {s}")));
            }
            if !(lambda > 0.0 && lambda <= 1.0) {
                return Err(validation(format!("lambda {lambda} not in (0, 1]")));
            }
            let report = prerequisites(kappa, s, &params, lambda);
            print_json(&json!({
                "kappa": kappa,
                "s": s,
                "lambda": lambda,
                "extents": extents_unchecked(kappa, s, &params),
                "sweep_bounds": sweep_bounds_unchecked(kappa, s, &params),
                "prerequisites": report,
            }));
            if report.ok {
                Ok(())
            } else {
                Err(validation(format!("prerequisites violated: {:?}", report.violated)))
            }
        }
        Command::Escalate { scenario, nfe, max, overrides, out } => {
            let s = load(&scenario, Some(&overrides))?;
            let seed = prepare(&s)?;
            let embodied_nfe = seed.guess.n_fe();
            let start = nfe.unwrap_or(embodied_nfe).max(2);
            let max = max.unwrap_or(4 * start);
            let esc = naive_escalation_from_seed(&s, &seed, start, max)?;
            let summary = json!({
                "scenario": s.name,
                "embodied_nfe": embodied_nfe,
                "n_start": start,
                "n_max": max,
                "n_safe": esc.n_safe,
                "trail": esc.trail,
            });
            print_json(&summary);
            if let Some(dir) = out {
                write_json(&dir, "escalation.json", &summary)?;
            }
            Ok(())
        }
        Command::Growth { scenario, tasks, lambdas, seed, out } => {
            let s = load(&scenario, None)?;
            if tasks == 0 {
                return Err(validation("--tasks must be at least 1"));
            }
            for &l in &lambdas {
                s.with_lambda(l).map_err(validation)?;
            }
            let opts = GrowthOptions { n_tasks: tasks, seed, ..Default::default() };
            let results = growth_rate_experiment(&s, &lambdas, &opts)?;
            print_json(&results);
            if let Some(dir) = out {
                write_json(&dir, "growth.json", &results)?;
            }
            if results.iter().all(|r| r.average_rate.is_none()) {
                return Err(Failure::Planning("every task failed".into()));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (code, msg) = match f {
                Failure::Validation(m) => (EXIT_VALIDATION, m),
                Failure::Planning(m) => (EXIT_PLANNING, m),
                Failure::Unsafe(m) => (EXIT_UNSAFE, m),
            };
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
