//! Joint levels and schedule with a discrete speed ladder on `m` identical
//! cores: exhaustive exact search, rounding plus list scheduling, LP model.

use std::ops::ControlFlow;
use std::time::{Duration, Instant};

use crate::discrete::{d_var, ilp_d_speed_with, level_rows, time_terms, LevelAssignment};
use crate::error::{Error, Result};
use crate::graph::{deadline_rtol, Closure, TaskGraph};
use crate::optim::{BnbOptions, LpModel, LpSense, SolveStatus};
use crate::scalar::Scalar;
use crate::sched_continuous::{continuous_lower_bound, halved_relaxation, require_scheduling};
use crate::schedule::{list_schedule, Schedule, Slot};

/// Default task cap of [`ilp_d_sched`].
pub const SCHED_TASK_LIMIT: usize = 12;

#[derive(Clone, Debug)]
pub struct DSchedOutcome<T> {
    pub schedule: Schedule<T>,
    pub levels: Vec<usize>,
    pub energy: T,
    pub makespan: T,
    /// `D - makespan`, never negative for a feasible schedule.
    pub slack: T,
    /// `Optimal`, or `TimeLimit` with the incumbent and proven bound.
    pub status: SolveStatus<T>,
    pub lower_bound: T,
}

fn require_discrete_scheduling<T: Scalar>(graph: &TaskGraph<T>) -> Result<(&[T], usize)> {
    require_scheduling(graph)?;
    let ladder = graph
        .speed_model()
        .levels()
        .ok_or(Error::WrongSpeedModel { expected: "discrete" })?;
    let m = graph.cores().ok_or(Error::MissingCores)?;
    Ok((ladder, m))
}

fn outcome<T: Scalar>(
    graph: &TaskGraph<T>,
    schedule: Schedule<T>,
    levels: Vec<usize>,
    status: SolveStatus<T>,
    lower_bound: T,
) -> DSchedOutcome<T> {
    let makespan = schedule.makespan(graph);
    DSchedOutcome {
        energy: schedule.energy(graph),
        slack: graph.deadline() - makespan,
        makespan,
        schedule,
        levels,
        status,
        lower_bound,
    }
}

/// Exact search over core assignments and same-core orders, up to
/// [`SCHED_TASK_LIMIT`] tasks.
pub fn ilp_d_sched<T: Scalar>(graph: &TaskGraph<T>, budget: Duration) -> Result<DSchedOutcome<T>> {
    ilp_d_sched_capped(graph, budget, SCHED_TASK_LIMIT)
}

/// Every core assignment (as a restricted growth string, so identical cores
/// are not revisited) times every linear extension of the precedence order
/// on each core. Each leaf is the augmented DAG handed to the level search,
/// cut off at the best energy found so far.
pub fn ilp_d_sched_capped<T: Scalar>(graph: &TaskGraph<T>, budget: Duration, max_tasks: usize) -> Result<DSchedOutcome<T>> {
    let (_, m) = require_discrete_scheduling(graph)?;
    let n = graph.len();
    if n > max_tasks {
        return Err(Error::InstanceTooLarge { reason: format!("{n} tasks, cap {max_tasks}") });
    }
    if !graph.fits_deadline(graph.min_critical_path()?) {
        return Err(Error::Infeasible);
    }
    let start = Instant::now();
    let closure = graph.transitive_closure()?;

    // rounding gives a valid first incumbent when it succeeds
    let mut best: Option<(Vec<Vec<usize>>, Vec<usize>, T)> = apx_d_sched(graph).ok().map(|a| {
        let mut orders = vec![Vec::new(); m];
        let mut by_start: Vec<usize> = (0..n).collect();
        by_start.sort_by(|&a_, &b_| {
            a.schedule.slots[a_]
                .start
                .partial_cmp(&a.schedule.slots[b_].start)
                .unwrap()
                .then(a_.cmp(&b_))
        });
        for j in by_start {
            orders[a.schedule.slots[j].core].push(j);
        }
        (orders, a.levels, a.energy)
    });
    let mut timed_out = false;
    let mut failure = None;

    let mut visit = |orders: &[Vec<usize>]| -> ControlFlow<()> {
        let remaining = budget.saturating_sub(start.elapsed());
        if remaining.is_zero() {
            timed_out = true;
            return ControlFlow::Break(());
        }
        let Ok(augmented) = graph.augment_with_mapping_order(orders) else {
            return ControlFlow::Continue(());
        };
        let opts = BnbOptions { time_budget: remaining, cutoff: best.as_ref().map(|b| b.2), ..Default::default() };
        match ilp_d_speed_with(&augmented, opts) {
            Ok(out) => {
                if matches!(out.status, SolveStatus::TimeLimit { .. }) {
                    timed_out = true;
                }
                let e = out.assignment.energy;
                if best.as_ref().map_or(true, |b| e < b.2) {
                    best = Some((orders.to_vec(), out.assignment.levels, e));
                }
                if timed_out {
                    return ControlFlow::Break(());
                }
            }
            Err(Error::Infeasible) => {}
            Err(Error::TimeLimitNoIncumbent { .. }) => {
                timed_out = true;
                return ControlFlow::Break(());
            }
            Err(e) => {
                failure = Some(e);
                return ControlFlow::Break(());
            }
        }
        ControlFlow::Continue(())
    };
    let _ = for_each_sequencing(n, m, &closure, &mut visit);
    if let Some(e) = failure {
        return Err(e);
    }

    let bound = || continuous_lower_bound(graph);
    let Some((orders, levels, energy)) = best else {
        return if timed_out {
            Err(Error::TimeLimitNoIncumbent { lower_bound: bound()?.to_f64_lossy() })
        } else {
            Err(Error::Infeasible)
        };
    };
    let schedule = asap_schedule(graph, &orders, &levels, m)?;
    let (status, lower_bound) = if timed_out {
        let lb = bound()?.min(energy);
        (SolveStatus::TimeLimit { incumbent: Some(energy), lower_bound: lb }, lb)
    } else {
        (SolveStatus::Optimal, energy)
    };
    Ok(outcome(graph, schedule, levels, status, lower_bound))
}

/// Calls `visit` with one task sequence per used core for every core
/// assignment up to core relabeling and every precedence-respecting order.
fn for_each_sequencing(
    n: usize,
    m: usize,
    closure: &Closure,
    visit: &mut dyn FnMut(&[Vec<usize>]) -> ControlFlow<()>,
) -> ControlFlow<()> {
    let mut block = vec![0usize; n];
    assign(0, 0, n, m, closure, &mut block, visit)
}

fn assign(
    j: usize,
    used: usize,
    n: usize,
    m: usize,
    closure: &Closure,
    block: &mut [usize],
    visit: &mut dyn FnMut(&[Vec<usize>]) -> ControlFlow<()>,
) -> ControlFlow<()> {
    if j == n {
        let groups: Vec<Vec<usize>> = (0..used).map(|c| (0..n).filter(|&i| block[i] == c).collect()).collect();
        let mut orders = vec![Vec::new(); used];
        return extend(0, &groups, closure, &mut orders, visit);
    }
    for c in 0..(used + 1).min(m) {
        block[j] = c;
        assign(j + 1, used.max(c + 1), n, m, closure, block, visit)?;
    }
    ControlFlow::Continue(())
}

/// Linear extensions of each group in turn, as a cartesian product.
fn extend(
    g: usize,
    groups: &[Vec<usize>],
    closure: &Closure,
    orders: &mut Vec<Vec<usize>>,
    visit: &mut dyn FnMut(&[Vec<usize>]) -> ControlFlow<()>,
) -> ControlFlow<()> {
    if g == groups.len() {
        return visit(orders);
    }
    if orders[g].len() == groups[g].len() {
        return extend(g + 1, groups, closure, orders, visit);
    }
    for &j in &groups[g] {
        if orders[g].contains(&j) {
            continue;
        }
        let ready = groups[g]
            .iter()
            .all(|&i| i == j || !closure.precedes(i, j) || orders[g].contains(&i));
        if ready {
            orders[g].push(j);
            let flow = extend(g, groups, closure, orders, visit);
            orders[g].pop();
            flow?;
        }
    }
    ControlFlow::Continue(())
}

/// Earliest start times of fixed sequences at the chosen levels.
fn asap_schedule<T: Scalar>(graph: &TaskGraph<T>, orders: &[Vec<usize>], levels: &[usize], m: usize) -> Result<Schedule<T>> {
    let augmented = graph.augment_with_mapping_order(orders)?;
    let a = LevelAssignment::new(&augmented, levels.to_vec());
    let finish = augmented.earliest_completions(&a.times)?;
    let mut slots = vec![Slot { core: 0, start: T::zero(), speed: T::one() }; graph.len()];
    for (c, seq) in orders.iter().enumerate() {
        for &j in seq {
            slots[j] = Slot { core: c, start: finish[j] - a.times[j], speed: a.speeds[j] };
        }
    }
    Ok(Schedule { cores: m, slots })
}

/// Halved relaxation on `[v_1, v_k]`, speeds rounded up to the ladder, list
/// scheduling in order of relaxed completion time. Speeds stay on the ladder,
/// so unused time is reported as slack instead of being spent.
pub fn apx_d_sched<T: Scalar>(graph: &TaskGraph<T>) -> Result<DSchedOutcome<T>> {
    let (ladder, m) = require_discrete_scheduling(graph)?;
    let relax = halved_relaxation(graph, m)?;
    let model = graph.speed_model();
    let top = ladder.len() - 1;
    let levels: Vec<usize> = (0..graph.len())
        .map(|j| {
            let w = graph.weight(j);
            if w == T::zero() {
                top
            } else {
                model.round_up(w / relax.x[j], deadline_rtol::<T>())
            }
        })
        .collect();
    let a = LevelAssignment::new(graph, levels);
    let placement = list_schedule(graph, &a.times, m, &relax.d);
    let slots = (0..graph.len())
        .map(|j| Slot { core: placement.core[j], start: placement.start[j], speed: a.speeds[j] })
        .collect();
    let lower_bound = relax.lower_bound;
    Ok(outcome(graph, Schedule { cores: m, slots }, a.levels, SolveStatus::Optimal, lower_bound))
}

pub(crate) fn z_var(j: usize, c: usize) -> String {
    format!("z_{j}_{c}")
}

pub(crate) fn e_var(i: usize, j: usize) -> String {
    format!("e_{i}_{j}")
}

/// The joint level, core and sequencing ILP with big-M equal to `D`.
pub fn ilp_sched_model<T: Scalar>(graph: &TaskGraph<T>) -> Result<LpModel> {
    let (ladder, m) = require_discrete_scheduling(graph)?;
    let n = graph.len();
    let deadline = graph.deadline().to_f64_lossy();
    let mut model = LpModel::default();
    level_rows(graph, ladder, &mut model);
    for j in 0..n {
        let ones = (0..m).map(|c| (z_var(j, c), 1.0)).collect();
        model.add_row(format!("core_{j}"), ones, LpSense::Eq, 1.0);
        model.binaries.extend((0..m).map(|c| z_var(j, c)));
    }
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            model.binaries.push(e_var(i, j));
            let mut terms = vec![(d_var(i), 1.0)];
            terms.extend(time_terms(graph, ladder, j));
            terms.push((d_var(j), -1.0));
            terms.push((e_var(i, j), deadline));
            model.add_row(format!("seq_{i}_{j}"), terms, LpSense::Le, deadline);
        }
    }
    for &(i, j) in graph.edges() {
        model.add_row(format!("edge_{i}_{j}"), vec![(e_var(i, j), 1.0)], LpSense::Eq, 1.0);
    }
    for i in 0..n {
        for j in i + 1..n {
            for c in 0..m {
                let terms = vec![(e_var(i, j), 1.0), (e_var(j, i), 1.0), (z_var(i, c), -1.0), (z_var(j, c), -1.0)];
                model.add_row(format!("share_{i}_{j}_{c}"), terms, LpSense::Ge, -1.0);
            }
        }
    }
    Ok(model)
}
