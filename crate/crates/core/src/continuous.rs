//! Continuous speeds for a fixed mapping: the exact convex program and the
//! linear-time equivalent-weight recursion on series-parallel graphs.

use crate::error::{Error, Result};
use crate::graph::{deadline_rtol, sp_decompose, ProblemClass, SpNode, TaskGraph};
use crate::optim::{ConvexOptions, DeadlineProgram};
use crate::scalar::Scalar;

/// One uniform speed per task.
#[derive(Clone, Debug, PartialEq)]
pub struct SpeedAssignment<T> {
    pub speeds: Vec<T>,
    pub times: Vec<T>,
    pub energy: T,
}

impl<T: Scalar> SpeedAssignment<T> {
    /// Zero-weight tasks take no time whatever their speed.
    pub fn from_speeds(graph: &TaskGraph<T>, speeds: Vec<T>) -> Self {
        let model = graph.speed_model();
        let mut times = Vec::with_capacity(speeds.len());
        let mut energy = T::zero();
        for (j, &s) in speeds.iter().enumerate() {
            let w = graph.weight(j);
            times.push(if w == T::zero() { T::zero() } else { w / s });
            energy += model.energy(w, s);
        }
        SpeedAssignment { speeds, times, energy }
    }

    pub fn makespan(&self, graph: &TaskGraph<T>) -> Result<T> {
        graph.critical_path_time(&self.times)
    }

    /// Meets the deadline and uses only eligible speeds.
    pub fn is_feasible(&self, graph: &TaskGraph<T>) -> bool {
        let rtol = deadline_rtol::<T>();
        self.makespan(graph).is_ok_and(|c| graph.fits_deadline(c))
            && self
                .speeds
                .iter()
                .enumerate()
                .all(|(j, &s)| graph.weight(j) == T::zero() || graph.speed_model().is_eligible(s, rtol))
    }
}

#[derive(Clone, Debug)]
pub struct CvxOutcome<T> {
    pub assignment: SpeedAssignment<T>,
    /// Certified lower bound on the optimal energy.
    pub lower_bound: T,
    pub newton_steps: usize,
}

fn require_mapping<T: Scalar>(graph: &TaskGraph<T>) -> Result<()> {
    graph.ensure_valid()?;
    if graph.class() == ProblemClass::Scheduling && graph.cores().is_some() {
        return Err(Error::WrongProblemClass { expected: "mapped" });
    }
    Ok(())
}

/// Optimal continuous speeds for a mapped instance (or an unmapped one on
/// unboundedly many cores).
pub fn cvx_speed<T: Scalar>(graph: &TaskGraph<T>) -> Result<CvxOutcome<T>> {
    require_mapping(graph)?;
    if graph.speed_model().is_discrete() {
        return Err(Error::WrongSpeedModel { expected: "continuous" });
    }
    solve_continuous(graph, None)
}

/// The convex program under the graph's speed bounds, optionally with a cap on
/// the summed execution time.
pub(crate) fn solve_continuous<T: Scalar>(graph: &TaskGraph<T>, volume_cap: Option<T>) -> Result<CvxOutcome<T>> {
    let mut program = DeadlineProgram::new(graph)?;
    if let Some(cap) = volume_cap {
        program = program.with_volume_cap(cap);
    }
    let sol = program.solve(&ConvexOptions::default())?;
    Ok(CvxOutcome {
        assignment: assignment_from_times(graph, &sol.x),
        lower_bound: sol.lower_bound.min(sol.energy),
        newton_steps: sol.newton_steps,
    })
}

pub(crate) fn assignment_from_times<T: Scalar>(graph: &TaskGraph<T>, x: &[T]) -> SpeedAssignment<T> {
    let smax = graph.speed_model().s_max();
    let speeds = (0..graph.len())
        .map(|j| {
            let w = graph.weight(j);
            if w == T::zero() {
                smax
            } else {
                w / x[j]
            }
        })
        .collect();
    SpeedAssignment::from_speeds(graph, speeds)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpgStatus {
    Exact,
    /// Some speed falls outside `[s_min, s_max]`; the assignment ignores the
    /// bounds.
    SpeedBoundViolated,
}

#[derive(Clone, Debug)]
pub struct SpgOutcome<T> {
    pub assignment: SpeedAssignment<T>,
    pub status: SpgStatus,
    pub equivalent_weight: T,
    /// Execution window `(start, duration)` of every task.
    pub windows: Vec<(T, T)>,
}

/// Speeds from the equivalent-weight recursion; fails with
/// `NotSeriesParallel` when the precedence order is not series-parallel.
pub fn spg_speed<T: Scalar>(graph: &TaskGraph<T>) -> Result<SpgOutcome<T>> {
    require_mapping(graph)?;
    let tree = sp_decompose(graph)?.ok_or(Error::NotSeriesParallel)?;
    let nodes = tree.nodes();
    let deadline = graph.deadline();
    let big_w = tree.total_weight();
    let smax = graph.speed_model().s_max();

    // top-down: speed and window of every tree node
    let mut speed = vec![T::zero(); nodes.len()];
    let mut window = vec![(T::zero(), T::zero()); nodes.len()];
    let root = tree.root();
    speed[root] = big_w / deadline;
    window[root] = (T::zero(), deadline);
    let mut speeds = vec![smax; graph.len()];
    let mut windows = vec![(T::zero(), T::zero()); graph.len()];
    for i in (0..nodes.len()).rev() {
        let (s, (start, len)) = (speed[i], window[i]);
        match nodes[i] {
            SpNode::Leaf(j) => {
                if graph.weight(j) > T::zero() {
                    speeds[j] = s;
                }
                windows[j] = (start, len);
            }
            SpNode::Series(a, b) => {
                speed[a] = s;
                speed[b] = s;
                let wa = tree.equivalent_weight(a);
                let wab = wa + tree.equivalent_weight(b);
                let la = if wab > T::zero() { len * wa / wab } else { T::zero() };
                window[a] = (start, la);
                window[b] = (start + la, len - la);
            }
            SpNode::Parallel(a, b) => {
                let wi = tree.equivalent_weight(i);
                for c in [a, b] {
                    speed[c] = if wi > T::zero() { s * tree.equivalent_weight(c) / wi } else { s };
                    window[c] = (start, len);
                }
            }
        }
    }
    let assignment = SpeedAssignment::from_speeds(graph, speeds);
    let rtol = deadline_rtol::<T>();
    let model = graph.speed_model().relaxed();
    let within = (0..graph.len())
        .all(|j| graph.weight(j) == T::zero() || model.is_eligible(assignment.speeds[j], rtol));
    Ok(SpgOutcome {
        assignment,
        status: if within { SpgStatus::Exact } else { SpgStatus::SpeedBoundViolated },
        equivalent_weight: big_w,
        windows,
    })
}

/// `W^alpha / D^(alpha-1)`: optimal energy of an SP graph with inactive bounds.
pub fn spg_energy<T: Scalar>(equivalent_weight: T, deadline: T, alpha: T) -> T {
    equivalent_weight.powf(alpha) / deadline.powf(alpha - T::one())
}

#[derive(Clone, Debug)]
pub struct BestContinuous<T> {
    pub assignment: SpeedAssignment<T>,
    /// The convex program was needed (not SP, or a speed bound was hit).
    pub used_fallback: bool,
    pub lower_bound: T,
}

/// The recursion when it is exact, the convex program otherwise.
pub fn best_continuous<T: Scalar>(graph: &TaskGraph<T>) -> Result<BestContinuous<T>> {
    let relaxed = graph.with_speed_model(graph.speed_model().relaxed());
    match spg_speed(&relaxed) {
        Ok(out) if out.status == SpgStatus::Exact => {
            let e = out.assignment.energy;
            return Ok(BestContinuous { assignment: out.assignment, used_fallback: false, lower_bound: e });
        }
        Ok(_) | Err(Error::NotSeriesParallel) => {}
        Err(e) => return Err(e),
    }
    let out = cvx_speed(&relaxed)?;
    Ok(BestContinuous { assignment: out.assignment, used_fallback: true, lower_bound: out.lower_bound })
}
