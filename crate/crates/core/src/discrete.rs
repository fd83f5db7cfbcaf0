//! Discrete speed ladder for a fixed mapping: exact branch and bound, rounding
//! of the continuous optimum, exhaustive enumeration, and the LP model.

use std::time::{Duration, Instant};

use crate::continuous::{best_continuous, SpeedAssignment};
use crate::error::{Error, Result};
use crate::graph::{deadline_rtol, ProblemClass, TaskGraph};
use crate::optim::{
    solve_bnb, BnbNode, BnbOptions, BnbStats, ConvexOptions, DeadlineProgram, LevelProblem, LpModel, LpSense,
    NodeRelaxation, SolveStatus, TraceEntry,
};
use crate::scalar::Scalar;

/// Largest search space the exhaustive oracle accepts.
pub const BRUTE_FORCE_LIMIT: u64 = 10_000_000;

/// One ladder index per task.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelAssignment<T> {
    pub levels: Vec<usize>,
    pub speeds: Vec<T>,
    pub times: Vec<T>,
    pub energy: T,
}

impl<T: Scalar> LevelAssignment<T> {
    pub fn new(graph: &TaskGraph<T>, levels: Vec<usize>) -> Self {
        let ladder = graph.speed_model().levels().expect("discrete speed model");
        let speeds: Vec<T> = levels.iter().map(|&l| ladder[l]).collect();
        let a = SpeedAssignment::from_speeds(graph, speeds);
        LevelAssignment { levels, speeds: a.speeds, times: a.times, energy: a.energy }
    }

    pub fn makespan(&self, graph: &TaskGraph<T>) -> Result<T> {
        graph.critical_path_time(&self.times)
    }
}

fn require_discrete_mapping<T: Scalar>(graph: &TaskGraph<T>) -> Result<&[T]> {
    graph.ensure_valid()?;
    if graph.class() == ProblemClass::Scheduling && graph.cores().is_some() {
        return Err(Error::WrongProblemClass { expected: "mapped" });
    }
    graph
        .speed_model()
        .levels()
        .ok_or(Error::WrongSpeedModel { expected: "discrete" })
}

#[derive(Clone, Debug)]
pub struct IlpOutcome<T> {
    pub assignment: LevelAssignment<T>,
    /// `Optimal`, or `TimeLimit` with the incumbent and proven bound.
    pub status: SolveStatus<T>,
    pub lower_bound: T,
    pub stats: BnbStats,
    /// Node bounds in visiting order, when requested.
    pub trace: Vec<TraceEntry<T>>,
}

impl<T: Scalar> IlpOutcome<T> {
    /// Relative distance between incumbent and bound.
    pub fn gap(&self) -> T {
        let e = self.assignment.energy;
        if e == T::zero() {
            T::zero()
        } else {
            ((e - self.lower_bound) / e).max(T::zero())
        }
    }
}

/// The speed-selection search space of a fixed DAG.
pub(crate) struct SpeedProblem<'g, T> {
    graph: &'g TaskGraph<T>,
    ladder: &'g [T],
    order: Vec<usize>,
    /// Deadline widened by the shared tolerance.
    deadline: T,
    /// Energy of task `j` at each level.
    cost: Vec<Vec<T>>,
    /// Local search is skipped from this instant on.
    polish_until: Option<Instant>,
}

impl<'g, T: Scalar> SpeedProblem<'g, T> {
    pub(crate) fn new(graph: &'g TaskGraph<T>, ladder: &'g [T]) -> Result<Self> {
        let model = graph.speed_model();
        let cost = (0..graph.len())
            .map(|j| ladder.iter().map(|&v| model.energy(graph.weight(j), v)).collect())
            .collect();
        Ok(SpeedProblem {
            graph,
            ladder,
            order: graph.topological_order()?,
            deadline: graph.deadline() * (T::one() + deadline_rtol::<T>()),
            cost,
            polish_until: None,
        })
    }

    fn times(&self, levels: &[usize]) -> Vec<T> {
        (0..self.graph.len())
            .map(|j| {
                let w = self.graph.weight(j);
                if w == T::zero() {
                    T::zero()
                } else {
                    w / self.ladder[levels[j]]
                }
            })
            .collect()
    }

    fn energy(&self, levels: &[usize]) -> T {
        levels.iter().enumerate().map(|(j, &l)| self.cost[j][l]).sum()
    }

    /// Repeatedly slows down the task with the best energy saving per unit of
    /// added time among those whose float absorbs the change.
    fn slow_down(&self, node: &BnbNode<T>, levels: &mut [usize], pinned: Option<usize>) {
        let n = self.graph.len();
        loop {
            let times = self.times(levels);
            let through = self.graph.longest_through_in(&self.order, &times);
            let mut pick: Option<(T, usize)> = None;
            for j in 0..n {
                let l = levels[j];
                if l == node.lo[j] || self.graph.weight(j) == T::zero() || pinned == Some(j) {
                    continue;
                }
                let added = self.graph.weight(j) / self.ladder[l - 1] - times[j];
                if through[j] + added > self.deadline {
                    continue;
                }
                let rate = (self.cost[j][l] - self.cost[j][l - 1]) / added;
                if pick.map_or(true, |(r, _)| rate > r) {
                    pick = Some((rate, j));
                }
            }
            match pick {
                Some((_, j)) => levels[j] -= 1,
                None => return,
            }
        }
    }

    /// Speeds up the cheapest task on an overlong path until every path meets
    /// the deadline; false when that is impossible inside the node.
    fn repair(&self, node: &BnbNode<T>, levels: &mut [usize], pinned: Option<usize>) -> bool {
        loop {
            let times = self.times(levels);
            let through = self.graph.longest_through_in(&self.order, &times);
            let mut pick: Option<(T, usize)> = None;
            let mut late = false;
            for j in 0..self.graph.len() {
                if through[j] <= self.deadline {
                    continue;
                }
                late = true;
                let l = levels[j];
                if l == node.hi[j] || self.graph.weight(j) == T::zero() || pinned == Some(j) {
                    continue;
                }
                let saved = times[j] - self.graph.weight(j) / self.ladder[l + 1];
                let rate = (self.cost[j][l + 1] - self.cost[j][l]) / saved;
                if pick.map_or(true, |(r, _)| rate < r) {
                    pick = Some((rate, j));
                }
            }
            match (late, pick) {
                (false, _) => return true,
                (true, Some((_, j))) => levels[j] += 1,
                (true, None) => return false,
            }
        }
    }

    /// Local search over single-level moves: a task sped up frees float that
    /// [`Self::slow_down`] spends elsewhere; a task slowed down is paid for by
    /// [`Self::repair`]. A move is kept when energy drops.
    fn polish(&self, node: &BnbNode<T>, levels: &mut Vec<usize>) {
        let mut energy = self.energy(levels);
        for _ in 0..POLISH_PASSES {
            if self.polish_until.is_some_and(|t| Instant::now() >= t) {
                return;
            }
            let mut improved = false;
            for j in 0..self.graph.len() {
                if self.graph.weight(j) == T::zero() {
                    continue;
                }
                for faster in [true, false] {
                    let mut trial = levels.clone();
                    if faster && trial[j] < node.hi[j] {
                        trial[j] += 1;
                    } else if !faster && trial[j] > node.lo[j] {
                        trial[j] -= 1;
                        if !self.repair(node, &mut trial, Some(j)) {
                            continue;
                        }
                    } else {
                        continue;
                    }
                    self.slow_down(node, &mut trial, Some(j));
                    let e = self.energy(&trial);
                    if e < energy * (T::one() - T::lit(1e-12)) {
                        *levels = trial;
                        energy = e;
                        improved = true;
                    }
                }
            }
            if !improved {
                return;
            }
        }
    }
}

/// Bound on local-search sweeps per candidate.
const POLISH_PASSES: usize = 20;

impl<T: Scalar> LevelProblem<T> for SpeedProblem<'_, T> {
    fn tasks(&self) -> usize {
        self.graph.len()
    }

    fn levels(&self) -> &[T] {
        self.ladder
    }

    fn root(&self) -> BnbNode<T> {
        let top = self.ladder.len() - 1;
        let n = self.graph.len();
        let fixed = |j: usize| self.graph.weight(j) == T::zero();
        BnbNode {
            lo: (0..n).map(|j| if fixed(j) { top } else { 0 }).collect(),
            hi: vec![top; n],
            parent_bound: T::neg_infinity(),
            depth: 0,
        }
    }

    fn relax(&self, node: &BnbNode<T>) -> Result<Option<NodeRelaxation<T>>> {
        let n = self.graph.len();
        let lower: Vec<T> = (0..n).map(|j| self.graph.weight(j) / self.ladder[node.hi[j]]).collect();
        if self.graph.critical_path_in(&self.order, &lower) > self.deadline {
            return Ok(None);
        }
        // a task gets at most the deadline minus the fastest path around it
        let through = self.graph.longest_through_in(&self.order, &lower);
        let lo: Vec<usize> = (0..n)
            .map(|j| {
                let window = self.deadline - (through[j] - lower[j]);
                let w = self.graph.weight(j);
                (node.lo[j]..node.hi[j]).find(|&l| w / self.ladder[l] <= window).unwrap_or(node.hi[j])
            })
            .collect();
        let upper: Vec<T> = (0..n).map(|j| self.graph.weight(j) / self.ladder[lo[j]]).collect();
        // the chords through the admissible levels bound every discrete choice
        let envelope = (0..n)
            .map(|j| {
                if self.graph.weight(j) == T::zero() {
                    return Vec::new();
                }
                (lo[j]..=node.hi[j])
                    .rev()
                    .map(|l| (self.graph.weight(j) / self.ladder[l], self.cost[j][l]))
                    .collect()
            })
            .collect();
        let program = DeadlineProgram::with_boxes(self.graph, lower, upper, self.deadline)?.with_envelope(envelope);
        let sol = match program.solve(&ConvexOptions::default()) {
            Ok(s) => s,
            Err(Error::Infeasible) => return Ok(None),
            Err(e) => return Err(e),
        };
        let speeds = (0..n)
            .map(|j| {
                let w = self.graph.weight(j);
                if w == T::zero() {
                    self.ladder[node.hi[j]]
                } else {
                    w / sol.x[j]
                }
            })
            .collect();
        Ok(Some(NodeRelaxation { bound: sol.lower_bound.min(sol.energy), speeds }))
    }

    fn evaluate(&self, levels: &[usize]) -> Option<T> {
        let times = self.times(levels);
        let cp = self.graph.critical_path_in(&self.order, &times);
        (cp <= self.deadline).then(|| self.energy(levels))
    }

    /// The rounded-up relaxation, then roundings that move tasks whose
    /// relaxed time leans towards the slower neighbouring level down to it,
    /// each repaired and improved by local search.
    fn candidates(&self, node: &BnbNode<T>, r: &NodeRelaxation<T>) -> Vec<Vec<usize>> {
        let rtol = T::lit(1e-9);
        let n = self.graph.len();
        let up: Vec<usize> = (0..n)
            .map(|j| {
                let target = r.speeds[j] * (T::one() - rtol);
                (node.lo[j]..=node.hi[j]).find(|&l| self.ladder[l] >= target).unwrap_or(node.hi[j])
            })
            .collect();
        // position of the relaxed time between the two levels, 0 at the faster
        let lean: Vec<T> = (0..n)
            .map(|j| {
                let w = self.graph.weight(j);
                let l = up[j];
                if w == T::zero() || l == node.lo[j] {
                    return T::zero();
                }
                let (fast, slow) = (w / self.ladder[l], w / self.ladder[l - 1]);
                ((w / r.speeds[j] - fast) / (slow - fast)).max(T::zero())
            })
            .collect();
        let mut out = vec![up.clone()];
        // the wider search pays off at the root only
        let cuts: &[T] = if node.depth == 0 {
            &[T::one(), T::lit(0.75), T::lit(0.5), T::lit(0.25)]
        } else {
            &[T::one()]
        };
        for &cut in cuts {
            let mut levels = up.clone();
            for j in 0..n {
                if lean[j] > cut {
                    levels[j] -= 1;
                }
            }
            if cut < T::one() && levels == up {
                continue;
            }
            if !self.repair(node, &mut levels, None) {
                continue;
            }
            self.slow_down(node, &mut levels, None);
            self.polish(node, &mut levels);
            if !out.contains(&levels) {
                out.push(levels);
            }
        }
        out
    }

    fn spread(&self, j: usize, a: usize, b: usize) -> T {
        self.cost[j][b] - self.cost[j][a]
    }
}

/// Exact level assignment by branch and bound on the convex relaxation.
pub fn ilp_d_speed<T: Scalar>(graph: &TaskGraph<T>, budget: Duration) -> Result<IlpOutcome<T>> {
    ilp_d_speed_with(graph, BnbOptions { time_budget: budget, ..Default::default() })
}

/// [`ilp_d_speed`] with full control over the search.
pub fn ilp_d_speed_with<T: Scalar>(graph: &TaskGraph<T>, opts: BnbOptions<'_, T>) -> Result<IlpOutcome<T>> {
    let ladder = require_discrete_mapping(graph)?;
    if !graph.fits_deadline(graph.min_critical_path()?) {
        return Err(Error::Infeasible);
    }
    let mut problem = SpeedProblem::new(graph, ladder)?;
    problem.polish_until = Instant::now().checked_add(opts.time_budget / 4);
    let out = solve_bnb(&problem, opts)?;
    match (out.levels, out.status) {
        (Some(levels), status) => Ok(IlpOutcome {
            assignment: LevelAssignment::new(graph, levels),
            status,
            lower_bound: out.lower_bound,
            stats: out.stats,
            trace: out.trace,
        }),
        (None, SolveStatus::TimeLimit { lower_bound, .. }) => {
            Err(Error::TimeLimitNoIncumbent { lower_bound: lower_bound.to_f64_lossy() })
        }
        (None, _) => Err(Error::Infeasible),
    }
}

#[derive(Clone, Debug)]
pub struct ApxDOutcome<T> {
    pub assignment: LevelAssignment<T>,
    /// The continuous speeds that were rounded.
    pub continuous: SpeedAssignment<T>,
    pub used_fallback: bool,
}

/// Continuous optimum on `[v_1, v_k]`, each speed rounded up to the ladder.
pub fn apx_d_speed<T: Scalar>(graph: &TaskGraph<T>) -> Result<ApxDOutcome<T>> {
    let ladder = require_discrete_mapping(graph)?;
    let best = best_continuous(graph)?;
    let model = graph.speed_model();
    let top = ladder.len() - 1;
    let levels = (0..graph.len())
        .map(|j| {
            if graph.weight(j) == T::zero() {
                top
            } else {
                model.round_up(best.assignment.speeds[j], deadline_rtol::<T>())
            }
        })
        .collect();
    Ok(ApxDOutcome {
        assignment: LevelAssignment::new(graph, levels),
        continuous: best.assignment,
        used_fallback: best.used_fallback,
    })
}

/// Exhaustive search over all `k^n` assignments in lexicographic order; the
/// first of several optima wins.
pub fn brute_force_discrete<T: Scalar>(graph: &TaskGraph<T>) -> Result<LevelAssignment<T>> {
    let ladder = require_discrete_mapping(graph)?;
    let n = graph.len();
    let k = ladder.len();
    let space = (k as u64).checked_pow(n as u32).filter(|&s| s <= BRUTE_FORCE_LIMIT);
    if space.is_none() {
        return Err(Error::InstanceTooLarge { reason: format!("{k}^{n} level assignments") });
    }
    let order = graph.topological_order()?;
    let alpha = graph.alpha();
    let times: Vec<Vec<T>> = (0..n)
        .map(|j| {
            let w = graph.weight(j);
            ladder.iter().map(|&v| if w == T::zero() { T::zero() } else { w / v }).collect()
        })
        .collect();
    let energy: Vec<Vec<T>> = (0..n)
        .map(|j| {
            let w = graph.weight(j);
            ladder
                .iter()
                .map(|&v| if w == T::zero() { T::zero() } else { w * v.powf(alpha - T::one()) })
                .collect()
        })
        .collect();
    let limit = graph.deadline() * (T::one() + deadline_rtol::<T>());

    let mut levels = vec![0usize; n];
    let mut finish = vec![T::zero(); n];
    let mut best: Option<(Vec<usize>, T)> = None;
    loop {
        let mut cp = T::zero();
        for &j in &order {
            let ready = graph.predecessors(j).iter().map(|&i| finish[i]).fold(T::zero(), T::max);
            finish[j] = ready + times[j][levels[j]];
            cp = cp.max(finish[j]);
        }
        if cp <= limit {
            let e: T = (0..n).map(|j| energy[j][levels[j]]).sum();
            if best.as_ref().map_or(true, |(_, b)| e < *b) {
                best = Some((levels.clone(), e));
            }
        }
        // next vector in lexicographic order
        let mut pos = n;
        loop {
            if pos == 0 {
                return match best {
                    Some((l, _)) => Ok(LevelAssignment::new(graph, l)),
                    None => Err(Error::Infeasible),
                };
            }
            pos -= 1;
            levels[pos] += 1;
            if levels[pos] < k {
                break;
            }
            levels[pos] = 0;
        }
    }
}

pub(crate) fn y_var(j: usize, l: usize) -> String {
    format!("y_{j}_{l}")
}

pub(crate) fn d_var(j: usize) -> String {
    format!("d_{j}")
}

/// Execution time of task `j` as a sum over its level indicators.
pub(crate) fn time_terms<T: Scalar>(graph: &TaskGraph<T>, ladder: &[T], j: usize) -> Vec<(String, f64)> {
    let w = graph.weight(j).to_f64_lossy();
    ladder.iter().enumerate().map(|(l, v)| (y_var(j, l), w / v.to_f64_lossy())).collect()
}

/// Indicators, assignment rows, per-task deadline and start rows.
pub(crate) fn level_rows<T: Scalar>(graph: &TaskGraph<T>, ladder: &[T], model: &mut LpModel) {
    let alpha = graph.alpha().to_f64_lossy();
    let deadline = graph.deadline().to_f64_lossy();
    for j in 0..graph.len() {
        let w = graph.weight(j).to_f64_lossy();
        for (l, v) in ladder.iter().enumerate() {
            let coef = w * v.to_f64_lossy().powf(alpha - 1.0);
            model.objective.push((y_var(j, l), coef));
            model.binaries.push(y_var(j, l));
        }
        let ones = (0..ladder.len()).map(|l| (y_var(j, l), 1.0)).collect();
        model.add_row(format!("assign_{j}"), ones, LpSense::Eq, 1.0);
        model.add_row(format!("deadline_{j}"), vec![(d_var(j), 1.0)], LpSense::Le, deadline);
        let mut start = time_terms(graph, ladder, j);
        start.push((d_var(j), -1.0));
        model.add_row(format!("start_{j}"), start, LpSense::Le, 0.0);
    }
}

/// The level-selection ILP of a mapped instance.
pub fn ilp_speed_model<T: Scalar>(graph: &TaskGraph<T>) -> Result<LpModel> {
    let ladder = require_discrete_mapping(graph)?;
    let mut model = LpModel::default();
    level_rows(graph, ladder, &mut model);
    for &(a, b) in graph.edges() {
        let mut terms = vec![(d_var(a), 1.0)];
        terms.extend(time_terms(graph, ladder, b));
        terms.push((d_var(b), -1.0));
        model.add_row(format!("prec_{a}_{b}"), terms, LpSense::Le, 0.0);
    }
    Ok(model)
}
