//! Algorithm dispatch, timing, independent energy recomputation and
//! normalization against a baseline.

use std::time::{Duration, Instant};

use clap::ValueEnum;
use edag_core::continuous::{best_continuous, cvx_speed, spg_speed, SpgStatus};
use edag_core::discrete::{apx_d_speed, ilp_d_speed};
use edag_core::graph::TaskGraph;
use edag_core::optim::SolveStatus;
use edag_core::sched_continuous::apx_sched;
use edag_core::sched_discrete::{apx_d_sched, ilp_d_sched};
use edag_core::schedule::{validate_schedule, Schedule, Slot};
use edag_core::Error;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    CvxSpeed,
    SpgSpeed,
    ApxSched,
    IlpDSpeed,
    ApxDSpeed,
    IlpDSched,
    ApxDSched,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::CvxSpeed,
        Algorithm::SpgSpeed,
        Algorithm::ApxSched,
        Algorithm::IlpDSpeed,
        Algorithm::ApxDSpeed,
        Algorithm::IlpDSched,
        Algorithm::ApxDSched,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::CvxSpeed => "cvx-speed",
            Algorithm::SpgSpeed => "spg-speed",
            Algorithm::ApxSched => "apx-sched",
            Algorithm::IlpDSpeed => "ilp-d-speed",
            Algorithm::ApxDSpeed => "apx-d-speed",
            Algorithm::IlpDSched => "ilp-d-sched",
            Algorithm::ApxDSched => "apx-d-sched",
        }
    }

    /// Chooses cores and start times, as opposed to speeds for a fixed mapping.
    pub fn schedules(self) -> bool {
        matches!(self, Algorithm::ApxSched | Algorithm::IlpDSched | Algorithm::ApxDSched)
    }

    pub fn is_discrete(self) -> bool {
        matches!(
            self,
            Algorithm::IlpDSpeed | Algorithm::ApxDSpeed | Algorithm::IlpDSched | Algorithm::ApxDSched
        )
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Baseline {
    /// Continuous speeds on the bare DAG with unboundedly many cores.
    #[default]
    Continuous,
    /// Discrete speeds on the bare DAG with unboundedly many cores.
    Discrete,
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub budget: Duration,
    pub baseline: Baseline,
    /// Repeat fast solves and keep the median time.
    pub repeat_fast: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { budget: Duration::from_secs(5), baseline: Baseline::Continuous, repeat_fast: true }
    }
}

/// Solves under this long are timed as the median of [`REPETITIONS`] runs.
pub const FAST_SOLVE: Duration = Duration::from_millis(100);
pub const REPETITIONS: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub instance_id: String,
    pub algorithm: String,
    pub cores: Option<usize>,
    pub status: String,
    /// Recomputed from the schedule, not taken from the solver.
    pub energy: Option<f64>,
    pub baseline: Option<f64>,
    pub normalized_energy: Option<f64>,
    pub wall_time_ms: f64,
    pub lower_bound: Option<f64>,
    pub gap: Option<f64>,
    pub makespan: Option<f64>,
    /// `D - makespan` for schedules that keep their speeds.
    pub slack: Option<f64>,
    pub violations: Vec<String>,
    pub flags: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Schedule<f64>>,
}

impl SolveReport {
    /// Whether the solve produced a schedule (possibly a time-limited one).
    pub fn has_solution(&self) -> bool {
        self.schedule.is_some()
    }
}

/// The instance does not fit the algorithm; nothing was solved.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// What one solver call yields before timing and normalization.
struct Solved {
    status: String,
    schedule: Schedule<f64>,
    lower_bound: Option<f64>,
    flags: Vec<String>,
}

/// Checks the instance against the algorithm before anything is timed.
pub fn check_compatible(graph: &TaskGraph<f64>, algo: Algorithm) -> Result<(), UsageError> {
    let mapped = graph.tasks().iter().all(|t| t.core.is_some());
    if algo.schedules() && mapped {
        return Err(UsageError(format!("{} needs an unmapped instance", algo.name())));
    }
    if !algo.schedules() && !mapped && graph.cores().is_some() {
        return Err(UsageError(format!(
            "{} needs a mapped instance or no core count",
            algo.name()
        )));
    }
    if algo.is_discrete() != graph.speed_model().is_discrete() {
        let kind = if algo.is_discrete() { "discrete" } else { "continuous" };
        return Err(UsageError(format!("{} needs a {kind} speed model", algo.name())));
    }
    if matches!(algo, Algorithm::IlpDSched | Algorithm::ApxDSched) && graph.cores().is_none() {
        return Err(UsageError(format!("{} needs a core count", algo.name())));
    }
    Ok(())
}

/// One task per core in topological position, or the mapped core, each task
/// starting as soon as its predecessors (mapping order included) finish.
fn asap(graph: &TaskGraph<f64>, speeds: &[f64]) -> Schedule<f64> {
    let times: Vec<f64> = (0..graph.len())
        .map(|j| if graph.weight(j) == 0.0 { 0.0 } else { graph.weight(j) / speeds[j] })
        .collect();
    let finish = graph.earliest_completions(&times).expect("validated graph is acyclic");
    let mapped = graph.tasks().iter().all(|t| t.core.is_some());
    let cores = if mapped { graph.cores().unwrap_or_else(|| 1 + graph.tasks().iter().filter_map(|t| t.core).max().unwrap_or(0)) } else { graph.len() };
    let slots = (0..graph.len())
        .map(|j| Slot {
            core: if mapped { graph.task(j).core.unwrap() } else { j },
            start: finish[j] - times[j],
            speed: speeds[j],
        })
        .collect();
    Schedule { cores, slots }
}

fn status_name(status: &SolveStatus<f64>) -> String {
    status.name().to_string()
}

fn solve_once(graph: &TaskGraph<f64>, algo: Algorithm, budget: Duration) -> Result<Solved, Error> {
    let mut flags = Vec::new();
    Ok(match algo {
        Algorithm::CvxSpeed => {
            let out = cvx_speed(graph)?;
            Solved {
                status: "Optimal".into(),
                schedule: asap(graph, &out.assignment.speeds),
                lower_bound: Some(out.lower_bound),
                flags,
            }
        }
        Algorithm::SpgSpeed => {
            let out = spg_speed(graph)?;
            let status = match out.status {
                SpgStatus::Exact => "Exact",
                SpgStatus::SpeedBoundViolated => "SpeedBoundViolated",
            };
            Solved { status: status.into(), schedule: asap(graph, &out.assignment.speeds), lower_bound: None, flags }
        }
        Algorithm::IlpDSpeed => {
            let out = ilp_d_speed(graph, budget)?;
            Solved {
                status: status_name(&out.status),
                schedule: asap(graph, &out.assignment.speeds),
                lower_bound: Some(out.lower_bound),
                flags,
            }
        }
        Algorithm::ApxDSpeed => {
            let out = apx_d_speed(graph)?;
            if out.used_fallback {
                flags.push("convex-fallback".into());
            }
            Solved { status: "Optimal".into(), schedule: asap(graph, &out.assignment.speeds), lower_bound: None, flags }
        }
        Algorithm::ApxSched => {
            let out = apx_sched(graph)?;
            if out.clamped {
                flags.push("smin-clamp".into());
            }
            Solved { status: "Optimal".into(), schedule: out.schedule, lower_bound: None, flags }
        }
        Algorithm::IlpDSched => {
            let out = ilp_d_sched(graph, budget)?;
            Solved {
                status: status_name(&out.status),
                schedule: out.schedule,
                lower_bound: Some(out.lower_bound),
                flags,
            }
        }
        Algorithm::ApxDSched => {
            let out = apx_d_sched(graph)?;
            Solved { status: "Optimal".into(), schedule: out.schedule, lower_bound: None, flags }
        }
    })
}

/// `sum_j w_j s_j^(alpha-1)` straight from the schedule.
pub fn recompute_energy(graph: &TaskGraph<f64>, schedule: &Schedule<f64>) -> f64 {
    let alpha = graph.alpha();
    schedule
        .slots
        .iter()
        .enumerate()
        .map(|(j, s)| {
            let w = graph.weight(j);
            if w == 0.0 {
                0.0
            } else {
                w * s.speed.powf(alpha - 1.0)
            }
        })
        .sum()
}

/// A certified lower bound on the energy of the bare DAG with unboundedly
/// many cores; `None` when that problem is infeasible or the bound is
/// unavailable.
pub fn baseline_energy(graph: &TaskGraph<f64>, baseline: Baseline, budget: Duration) -> Result<Option<f64>, UsageError> {
    let bare = if graph.tasks().iter().all(|t| t.core.is_some()) { graph.clone() } else { graph.with_cores(None) };
    match baseline {
        Baseline::Continuous => {
            let relaxed = bare.with_speed_model(bare.speed_model().relaxed()).with_cores(None);
            Ok(best_continuous(&relaxed).ok().map(|b| b.lower_bound))
        }
        Baseline::Discrete => {
            if !graph.speed_model().is_discrete() {
                return Err(UsageError("discrete baseline needs a discrete speed model".into()));
            }
            Ok(match ilp_d_speed(&bare.with_cores(None), budget) {
                Ok(out) => Some(out.lower_bound),
                Err(Error::TimeLimitNoIncumbent { lower_bound }) => Some(lower_bound),
                Err(_) => None,
            })
        }
    }
}

fn error_status(e: &Error) -> &'static str {
    match e {
        Error::Infeasible | Error::InfeasibleOrder => "Infeasible",
        Error::TimeLimitNoIncumbent { .. } => "TimeLimit",
        Error::NumericalFailure(_) => "NumericalFailure",
        Error::InstanceTooLarge { .. } => "TooLarge",
        Error::NotSeriesParallel => "NotSeriesParallel",
        _ => "Error",
    }
}

/// Solves `graph` with `algo`. Solver failures are reported in the status;
/// only an incompatible instance is an error.
pub fn run(graph: &TaskGraph<f64>, instance_id: &str, algo: Algorithm, opts: &RunOptions) -> Result<SolveReport, UsageError> {
    check_compatible(graph, algo)?;
    graph.ensure_valid().map_err(|e| UsageError(e.to_string()))?;
    let baseline = baseline_energy(graph, opts.baseline, opts.budget)?;

    let start = Instant::now();
    let first = solve_once(graph, algo, opts.budget);
    let mut elapsed = start.elapsed();
    if opts.repeat_fast && elapsed < FAST_SOLVE {
        let mut times = vec![elapsed];
        for _ in 1..REPETITIONS {
            let t = Instant::now();
            let _ = std::hint::black_box(solve_once(graph, algo, opts.budget));
            times.push(t.elapsed());
        }
        times.sort();
        elapsed = times[REPETITIONS / 2];
    }
    let wall_time_ms = elapsed.as_secs_f64() * 1e3;

    let mut report = SolveReport {
        instance_id: instance_id.to_string(),
        algorithm: algo.name().to_string(),
        cores: graph.cores(),
        status: String::new(),
        energy: None,
        baseline,
        normalized_energy: None,
        wall_time_ms,
        lower_bound: None,
        gap: None,
        makespan: None,
        slack: None,
        violations: Vec::new(),
        flags: Vec::new(),
        schedule: None,
    };
    match first {
        Ok(s) => {
            let energy = recompute_energy(graph, &s.schedule);
            let makespan = s.schedule.makespan(graph);
            report.status = s.status;
            report.energy = Some(energy);
            report.normalized_energy = baseline.filter(|b| *b > 0.0).map(|b| energy / b);
            report.lower_bound = s.lower_bound;
            report.gap = s.lower_bound.map(|lb| if energy > 0.0 { ((energy - lb) / energy).max(0.0) } else { 0.0 });
            report.makespan = Some(makespan);
            if algo == Algorithm::ApxDSched {
                report.slack = Some(graph.deadline() - makespan);
            }
            report.violations = validate_schedule(graph, &s.schedule).iter().map(|v| v.to_string()).collect();
            report.flags = s.flags;
            report.schedule = Some(s.schedule);
        }
        Err(e) => {
            report.status = error_status(&e).to_string();
            if let Error::TimeLimitNoIncumbent { lower_bound } = e {
                report.lower_bound = Some(lower_bound);
            }
            if report.status == "Error" {
                report.flags.push(e.to_string());
            }
        }
    }
    Ok(report)
}
