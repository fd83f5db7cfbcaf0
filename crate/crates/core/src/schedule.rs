//! Schedules on identical cores: list scheduling and an independent validator.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::graph::{deadline_rtol, TaskGraph};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Slot<T> {
    pub core: usize,
    pub start: T,
    pub speed: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule<T> {
    pub cores: usize,
    pub slots: Vec<Slot<T>>,
}

impl<T: Scalar> Schedule<T> {
    pub fn duration(&self, graph: &TaskGraph<T>, j: usize) -> T {
        let w = graph.weight(j);
        if w == T::zero() {
            T::zero()
        } else {
            w / self.slots[j].speed
        }
    }

    pub fn completion(&self, graph: &TaskGraph<T>, j: usize) -> T {
        self.slots[j].start + self.duration(graph, j)
    }

    pub fn makespan(&self, graph: &TaskGraph<T>) -> T {
        (0..self.slots.len())
            .map(|j| self.completion(graph, j))
            .fold(T::zero(), T::max)
    }

    pub fn energy(&self, graph: &TaskGraph<T>) -> T {
        let model = graph.speed_model();
        (0..self.slots.len())
            .map(|j| model.energy(graph.weight(j), self.slots[j].speed))
            .sum()
    }
}

/// Placement produced by [`list_schedule`], before speeds are attached.
#[derive(Clone, Debug, PartialEq)]
pub struct Placement<T> {
    pub core: Vec<usize>,
    pub start: Vec<T>,
    pub makespan: T,
}

/// Graham list scheduling: whenever a core falls idle, it starts the ready task
/// of smallest `priority` (ties by index). The earliest idle core is served
/// first, lowest index among equals.
///
/// Panics if the resulting makespan exceeds `sum(times)/m + critical path`.
pub fn list_schedule<T: Scalar>(graph: &TaskGraph<T>, times: &[T], m: usize, priority: &[T]) -> Placement<T> {
    assert!(m >= 1, "at least one core");
    let n = graph.len();
    let mut missing: Vec<usize> = (0..n).map(|j| graph.predecessors(j).len()).collect();
    let mut ready_at = vec![T::zero(); n];
    // tasks whose predecessors are all placed
    let mut released: Vec<usize> = (0..n).filter(|&j| missing[j] == 0).collect();
    let mut free = vec![T::zero(); m];
    let mut core = vec![usize::MAX; n];
    let mut start = vec![T::zero(); n];
    let mut placed = 0;
    while placed < n {
        let c = (0..m)
            .min_by(|&a, &b| free[a].partial_cmp(&free[b]).unwrap().then(a.cmp(&b)))
            .unwrap();
        let now = free[c];
        let pick = released
            .iter()
            .enumerate()
            .filter(|(_, &j)| ready_at[j] <= now)
            .min_by(|(_, &a), (_, &b)| priority[a].partial_cmp(&priority[b]).unwrap().then(a.cmp(&b)))
            .map(|(i, _)| i);
        let Some(i) = pick else {
            // idle until the next release
            let next = released
                .iter()
                .map(|&j| ready_at[j])
                .fold(T::infinity(), T::min);
            debug_assert!(next.is_finite() && next > now);
            free[c] = next;
            continue;
        };
        let j = released.swap_remove(i);
        core[j] = c;
        start[j] = now;
        let end = now + times[j];
        free[c] = end;
        placed += 1;
        for &k in graph.successors(j) {
            ready_at[k] = ready_at[k].max(end);
            missing[k] -= 1;
            if missing[k] == 0 {
                released.push(k);
            }
        }
    }
    let makespan = (0..n).map(|j| start[j] + times[j]).fold(T::zero(), T::max);

    let volume: T = times.iter().copied().sum::<T>() / T::from_usize(m).unwrap();
    let order = graph.topological_order().expect("acyclic graph");
    let path = graph.critical_path_in(&order, times);
    let slack = T::lit(1e-9) * (volume + path) + T::min_positive_value();
    assert!(
        makespan <= volume + path + slack,
        "list schedule makespan {makespan} exceeds volume {volume} + critical path {path}"
    );
    Placement { core, start, makespan }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ScheduleViolation {
    WrongTaskCount { expected: usize, found: usize },
    CoreOutOfRange { task: String, core: usize },
    NegativeStart { task: String },
    CoreOverlap { core: usize, first: String, second: String },
    PrecedenceViolated { from: String, to: String },
    DeadlineMissed { task: String },
    IneligibleSpeed { task: String, speed: f64 },
    WrongCore { task: String, expected: usize, found: usize },
}

impl ScheduleViolation {
    pub fn code(&self) -> &'static str {
        match self {
            ScheduleViolation::WrongTaskCount { .. } => "WrongTaskCount",
            ScheduleViolation::CoreOutOfRange { .. } => "CoreOutOfRange",
            ScheduleViolation::NegativeStart { .. } => "NegativeStart",
            ScheduleViolation::CoreOverlap { .. } => "CoreOverlap",
            ScheduleViolation::PrecedenceViolated { .. } => "PrecedenceViolated",
            ScheduleViolation::DeadlineMissed { .. } => "DeadlineMissed",
            ScheduleViolation::IneligibleSpeed { .. } => "IneligibleSpeed",
            ScheduleViolation::WrongCore { .. } => "WrongCore",
        }
    }
}

impl fmt::Display for ScheduleViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScheduleViolation::WrongTaskCount { expected, found } => {
                write!(f, "{found} slots for {expected} tasks")
            }
            ScheduleViolation::CoreOutOfRange { task, core } => write!(f, "{task} on missing core {core}"),
            ScheduleViolation::NegativeStart { task } => write!(f, "{task} starts before 0"),
            ScheduleViolation::CoreOverlap { core, first, second } => {
                write!(f, "{first} and {second} overlap on core {core}")
            }
            ScheduleViolation::PrecedenceViolated { from, to } => write!(f, "{to} starts before {from} ends"),
            ScheduleViolation::DeadlineMissed { task } => write!(f, "{task} ends after the deadline"),
            ScheduleViolation::IneligibleSpeed { task, speed } => write!(f, "{task} runs at ineligible speed {speed}"),
            ScheduleViolation::WrongCore { task, expected, found } => {
                write!(f, "{task} mapped to core {expected} but runs on {found}")
            }
        }
    }
}

/// Every violation of the schedule against the instance; empty iff valid.
///
/// Times are compared with a relative slack of the deadline tolerance.
pub fn validate_schedule<T: Scalar>(graph: &TaskGraph<T>, schedule: &Schedule<T>) -> Vec<ScheduleViolation> {
    let mut out = Vec::new();
    let n = graph.len();
    if schedule.slots.len() != n {
        out.push(ScheduleViolation::WrongTaskCount { expected: n, found: schedule.slots.len() });
        return out;
    }
    let rtol = deadline_rtol::<T>();
    let eps = rtol * graph.deadline();
    let name = |j: usize| graph.task(j).id.clone();
    let model = graph.speed_model();
    let cores = graph.cores().unwrap_or(usize::MAX).min(schedule.cores);

    let mut end = vec![T::zero(); n];
    for j in 0..n {
        let slot = schedule.slots[j];
        let w = graph.weight(j);
        let speed_ok = slot.speed.is_finite() && slot.speed > T::zero();
        if !speed_ok || (w > T::zero() && !model.is_eligible(slot.speed, rtol)) {
            out.push(ScheduleViolation::IneligibleSpeed { task: name(j), speed: slot.speed.to_f64_lossy() });
        }
        end[j] = if w == T::zero() || !speed_ok { slot.start } else { slot.start + w / slot.speed };
        if slot.core >= cores {
            out.push(ScheduleViolation::CoreOutOfRange { task: name(j), core: slot.core });
        }
        if let Some(c) = graph.task(j).core {
            if c != slot.core {
                out.push(ScheduleViolation::WrongCore { task: name(j), expected: c, found: slot.core });
            }
        }
        if !(slot.start >= -eps) {
            out.push(ScheduleViolation::NegativeStart { task: name(j) });
        }
        if !graph.fits_deadline(end[j]) {
            out.push(ScheduleViolation::DeadlineMissed { task: name(j) });
        }
    }
    for &(a, b) in graph.edges() {
        if schedule.slots[b].start < end[a] - eps {
            out.push(ScheduleViolation::PrecedenceViolated { from: name(a), to: name(b) });
        }
    }
    let mut by_core: Vec<Vec<usize>> = Vec::new();
    for (j, slot) in schedule.slots.iter().enumerate() {
        if slot.core < schedule.cores {
            if by_core.len() <= slot.core {
                by_core.resize(slot.core + 1, Vec::new());
            }
            by_core[slot.core].push(j);
        }
    }
    for (c, tasks) in by_core.iter_mut().enumerate() {
        tasks.sort_by(|&a, &b| {
            let sa = (schedule.slots[a].start, end[a]);
            let sb = (schedule.slots[b].start, end[b]);
            sa.partial_cmp(&sb).unwrap_or(std::cmp::Ordering::Equal)
        });
        // zero-length tasks never overlap anything
        let mut last: Option<usize> = None;
        for &j in tasks.iter() {
            if end[j] <= schedule.slots[j].start {
                continue;
            }
            if let Some(i) = last {
                if schedule.slots[j].start < end[i] - eps {
                    out.push(ScheduleViolation::CoreOverlap { core: c, first: name(i), second: name(j) });
                }
            }
            if last.map_or(true, |i| end[j] > end[i]) {
                last = Some(j);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{SpeedModel, Task};

    fn graph(n: usize, edges: &[(usize, usize)], d: f64) -> TaskGraph<f64> {
        TaskGraph::new(
            (0..n).map(|i| Task::new(format!("t{i}"), 1.0)).collect(),
            edges.to_vec(),
            d,
            SpeedModel::discrete(3.0, vec![1.0, 2.0]),
            Some(2),
        )
    }

    fn by_index(n: usize) -> Vec<f64> {
        (0..n).map(|j| j as f64).collect()
    }

    #[test]
    fn three_independent_on_two_cores() {
        let g = graph(3, &[], 10.0);
        let p = list_schedule(&g, &[3.0, 3.0, 3.0], 2, &by_index(3));
        assert_eq!(p.makespan, 6.0);
    }

    #[test]
    fn chain_ignores_extra_cores() {
        let g = graph(2, &[(0, 1)], 10.0);
        let p = list_schedule(&g, &[1.0, 2.0], 8, &by_index(2));
        assert_eq!(p.makespan, 3.0);
    }

    #[test]
    fn diamond_on_two_cores_is_optimal() {
        let g = graph(4, &[(0, 1), (0, 2), (1, 3), (2, 3)], 10.0);
        let p = list_schedule(&g, &[1.0; 4], 2, &by_index(4));
        assert_eq!(p.makespan, 3.0);
        assert_ne!(p.core[1], p.core[2]);
    }

    #[test]
    fn no_core_idles_while_a_task_is_ready() {
        // a1(5) -> g, b1(5) -> q, c1(5) -> h with tiny successors on two cores
        let w = [5.0, 0.01, 5.0, 0.01, 5.0, 0.01];
        let g = TaskGraph::new(
            w.iter().enumerate().map(|(i, &x)| Task::new(format!("t{i}"), x)).collect(),
            vec![(0, 1), (2, 3), (4, 5)],
            100.0,
            SpeedModel::continuous(3.0, 0.1, 1.0),
            Some(2),
        );
        let p = list_schedule(&g, &w, 2, &by_index(6));
        assert!(p.makespan <= 15.0 * 0.5 + 5.01 + 1e-12);
    }

    #[test]
    fn validator_catches_overlap_and_speed() {
        let g = graph(2, &[], 10.0);
        let s = Schedule {
            cores: 2,
            slots: vec![
                Slot { core: 0, start: 0.0, speed: 1.0 },
                Slot { core: 0, start: 0.5, speed: 1.3 },
            ],
        };
        let codes: Vec<_> = validate_schedule(&g, &s).iter().map(|v| v.code()).collect();
        assert!(codes.contains(&"CoreOverlap"));
        assert!(codes.contains(&"IneligibleSpeed"));
    }

    #[test]
    fn validator_accepts_back_to_back() {
        let g = graph(2, &[(0, 1)], 2.0);
        let s = Schedule {
            cores: 2,
            slots: vec![
                Slot { core: 0, start: 0.0, speed: 1.0 },
                Slot { core: 1, start: 1.0, speed: 1.0 },
            ],
        };
        assert!(validate_schedule(&g, &s).is_empty());
        let late = Schedule { slots: vec![s.slots[0], Slot { start: 1.5, ..s.slots[1] }], ..s.clone() };
        let codes: Vec<_> = validate_schedule(&g, &late).iter().map(|v| v.code()).collect();
        assert_eq!(codes, vec!["DeadlineMissed"]);
        let early = Schedule { slots: vec![s.slots[0], Slot { start: 0.5, ..s.slots[1] }], ..s };
        let codes: Vec<_> = validate_schedule(&g, &early).iter().map(|v| v.code()).collect();
        assert_eq!(codes, vec!["PrecedenceViolated"]);
    }
}
