//! Joint speeds and schedule with continuous speeds on `m` identical cores.

use crate::continuous::{cvx_speed, solve_continuous};
use crate::error::{Error, Result};
use crate::graph::{ProblemClass, TaskGraph};
use crate::optim::{ConvexOptions, DeadlineProgram, DeadlineSolution};
use crate::scalar::Scalar;
use crate::schedule::{list_schedule, Schedule, Slot};

#[derive(Clone, Debug)]
pub struct SchedOutcome<T> {
    pub schedule: Schedule<T>,
    pub energy: T,
    /// Makespan of the list schedule before any speed lowering.
    pub list_makespan: T,
    /// Final makespan.
    pub makespan: T,
    /// Some task was held at `s_min` while lowering speeds.
    pub clamped: bool,
}

pub(crate) fn require_scheduling<T: Scalar>(graph: &TaskGraph<T>) -> Result<()> {
    graph.ensure_valid()?;
    if graph.class() == ProblemClass::Mapping {
        return Err(Error::WrongProblemClass { expected: "unmapped" });
    }
    Ok(())
}

/// The relaxation with deadline `D/2` and total time at most `m D / 2`.
pub(crate) fn halved_relaxation<T: Scalar>(graph: &TaskGraph<T>, m: usize) -> Result<DeadlineSolution<T>> {
    let half = graph.deadline() * T::lit(0.5);
    let smin = graph.speed_model().s_min();
    let smax = graph.speed_model().s_max();
    let lower = graph.tasks().iter().map(|t| t.weight / smax).collect();
    let upper = graph.tasks().iter().map(|t| t.weight / smin).collect();
    DeadlineProgram::with_boxes(graph, lower, upper, half)?
        .with_volume_cap(half * T::from_usize(m).unwrap())
        .solve(&ConvexOptions::default())
}

/// Relaxation speeds, list scheduling in order of relaxed completion time,
/// then a uniform stretch of the time axis by `D / C`.
pub fn apx_sched<T: Scalar>(graph: &TaskGraph<T>) -> Result<SchedOutcome<T>> {
    require_scheduling(graph)?;
    if graph.speed_model().is_discrete() {
        return Err(Error::WrongSpeedModel { expected: "continuous" });
    }
    let Some(m) = graph.cores() else {
        return unbounded(graph);
    };
    let relax = halved_relaxation(graph, m)?;
    let placement = list_schedule(graph, &relax.x, m, &relax.d);
    let deadline = graph.deadline();
    let smin = graph.speed_model().s_min();
    let smax = graph.speed_model().s_max();
    let c = placement.makespan;

    let mut clamped = false;
    let (factor, stretch) = if c > T::zero() && c < deadline { (c / deadline, deadline / c) } else { (T::one(), T::one()) };
    let slots = (0..graph.len())
        .map(|j| {
            let w = graph.weight(j);
            let speed = if w == T::zero() {
                smax
            } else {
                let s = w / relax.x[j] * factor;
                if s < smin {
                    clamped = true;
                    smin
                } else {
                    s.min(smax)
                }
            };
            Slot { core: placement.core[j], start: placement.start[j] * stretch, speed }
        })
        .collect();
    let schedule = Schedule { cores: m, slots };
    Ok(SchedOutcome {
        energy: schedule.energy(graph),
        makespan: schedule.makespan(graph),
        list_makespan: c,
        clamped,
        schedule,
    })
}

/// One task per core: the convex program on the bare DAG.
fn unbounded<T: Scalar>(graph: &TaskGraph<T>) -> Result<SchedOutcome<T>> {
    let out = cvx_speed(graph)?;
    let a = out.assignment;
    let order = graph.topological_order()?;
    let finish = graph.earliest_completions(&a.times)?;
    let mut slots = vec![Slot { core: 0, start: T::zero(), speed: T::one() }; graph.len()];
    for (c, &j) in order.iter().enumerate() {
        slots[j] = Slot { core: c, start: finish[j] - a.times[j], speed: a.speeds[j] };
    }
    let schedule = Schedule { cores: graph.len(), slots };
    let makespan = schedule.makespan(graph);
    Ok(SchedOutcome { energy: a.energy, list_makespan: makespan, makespan, clamped: false, schedule })
}

/// Certified lower bound on the energy of any schedule on the graph's cores:
/// the convex program with precedence and deadline rows, plus the volume row
/// `sum x_j <= m D` when the core count is finite.
pub fn continuous_lower_bound<T: Scalar>(graph: &TaskGraph<T>) -> Result<T> {
    graph.ensure_valid()?;
    let relaxed = graph.with_speed_model(graph.speed_model().relaxed());
    let cap = graph.cores().map(|m| graph.deadline() * T::from_usize(m).unwrap());
    Ok(solve_continuous(&relaxed, cap)?.lower_bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{SpeedModel, Task};
    use crate::schedule::validate_schedule;

    fn graph(weights: &[f64], edges: &[(usize, usize)], d: f64, smax: f64, m: Option<usize>) -> TaskGraph<f64> {
        TaskGraph::new(
            weights.iter().enumerate().map(|(i, &w)| Task::new(format!("t{i}"), w)).collect(),
            edges.to_vec(),
            d,
            SpeedModel::continuous(3.0, 0.1, smax),
            m,
        )
    }

    #[test]
    fn independent_pair_lowers_to_half_speed() {
        let g = graph(&[1.0, 1.0], &[], 2.0, 2.0, Some(2));
        let out = apx_sched(&g).unwrap();
        assert!((out.list_makespan - 1.0).abs() < 1e-7);
        for s in &out.schedule.slots {
            assert!((s.speed - 0.5).abs() < 1e-7);
        }
        assert!((out.energy - 0.5).abs() < 1e-7);
        assert!((continuous_lower_bound(&g.with_cores(None)).unwrap() - 0.5).abs() < 1e-8);
        assert!(validate_schedule(&g, &out.schedule).is_empty());
    }

    #[test]
    fn chain_on_one_core_reaches_optimum() {
        let g = graph(&[1.0, 1.0], &[(0, 1)], 2.0, 4.0, Some(1));
        let out = apx_sched(&g).unwrap();
        assert!((out.energy - 2.0).abs() < 1e-7);
        assert!((out.makespan - 2.0).abs() < 1e-9);
        assert!(validate_schedule(&g, &out.schedule).is_empty());
    }

    #[test]
    fn too_heavy_for_half_deadline() {
        let g = graph(&[3.0], &[], 1.0, 2.0, Some(1));
        assert!(matches!(apx_sched(&g), Err(Error::Infeasible)));
    }

    #[test]
    fn lower_bound_of_independent_pair() {
        let g = graph(&[1.0, 1.0], &[], 2.0, 10.0, None);
        assert!((continuous_lower_bound(&g).unwrap() - 0.5).abs() < 1e-8);
    }

    #[test]
    fn lower_bound_of_diamond_equals_cvx() {
        let g = graph(&[1.0; 4], &[(0, 1), (0, 2), (1, 3), (2, 3)], 4.0, 10.0, None);
        let lb = continuous_lower_bound(&g).unwrap();
        let cvx = cvx_speed(&g).unwrap().assignment.energy;
        assert!(lb <= cvx && cvx - lb < 1e-8 * cvx);
    }

    #[test]
    fn unbounded_cores_route_to_convex_program() {
        let g = graph(&[1.0, 1.0, 1.0], &[(0, 2), (1, 2)], 2.0, 10.0, None);
        let out = apx_sched(&g).unwrap();
        assert!(validate_schedule(&g, &out.schedule).is_empty());
        let w = 2f64.powf(1.0 / 3.0) + 1.0;
        assert!((out.energy - w.powi(3) / 4.0).abs() < 1e-7);
    }

    #[test]
    fn mapped_instance_is_rejected() {
        let g = TaskGraph::new(
            vec![Task::new("a", 1.0).on_core(0)],
            vec![],
            1.0,
            SpeedModel::continuous(3.0, 0.1, 4.0),
            Some(1),
        );
        assert!(matches!(apx_sched(&g), Err(Error::WrongProblemClass { .. })));
    }
}
