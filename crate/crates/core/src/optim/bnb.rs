//! Branch and bound over per-task speed-level intervals: best-bound node
//! selection, diving into the preferred child of every expanded node.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::SolveStatus;

/// Admissible level interval `lo[j]..=hi[j]` of every task.
#[derive(Clone, Debug, PartialEq)]
pub struct BnbNode<T> {
    pub lo: Vec<usize>,
    pub hi: Vec<usize>,
    pub parent_bound: T,
    pub depth: usize,
}

impl<T: Scalar> BnbNode<T> {
    pub fn is_leaf(&self) -> bool {
        self.lo == self.hi
    }
}

/// Continuous relaxation of a node: a lower bound on every completion of the
/// node and the relaxed speed of each task.
#[derive(Clone, Debug)]
pub struct NodeRelaxation<T> {
    pub bound: T,
    pub speeds: Vec<T>,
}

/// A level-assignment problem searched by [`solve_bnb`].
pub trait LevelProblem<T: Scalar> {
    fn tasks(&self) -> usize;

    /// Speed ladder, ascending.
    fn levels(&self) -> &[T];

    /// Root intervals; tasks whose choice does not matter may be fixed here.
    fn root(&self) -> BnbNode<T> {
        let k = self.levels().len();
        BnbNode {
            lo: vec![0; self.tasks()],
            hi: vec![k - 1; self.tasks()],
            parent_bound: T::neg_infinity(),
            depth: 0,
        }
    }

    /// `Ok(None)` when no assignment inside the node is feasible.
    fn relax(&self, node: &BnbNode<T>) -> Result<Option<NodeRelaxation<T>>>;

    /// Energy of a complete assignment, `None` when it is infeasible.
    fn evaluate(&self, levels: &[usize]) -> Option<T>;

    /// Complete assignments inside the node worth evaluating.
    fn candidates(&self, node: &BnbNode<T>, relaxation: &NodeRelaxation<T>) -> Vec<Vec<usize>>;

    /// Energy spread of task `j` between levels `a < b`, used for branching.
    fn spread(&self, j: usize, a: usize, b: usize) -> T;
}

pub struct BnbOptions<'a, T> {
    pub time_budget: Duration,
    /// Nodes whose bound is within this relative distance of the incumbent
    /// are pruned.
    pub rel_gap: T,
    /// Called with each improving incumbent and its energy.
    pub on_incumbent: Option<&'a mut dyn FnMut(&[usize], T)>,
    pub record_trace: bool,
    /// Only assignments strictly cheaper than this are of interest.
    pub cutoff: Option<T>,
}

impl<T: Scalar> Default for BnbOptions<'_, T> {
    fn default() -> Self {
        BnbOptions {
            time_budget: Duration::from_secs(5),
            rel_gap: T::lit(1e-9),
            on_incumbent: None,
            record_trace: false,
            cutoff: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceEntry<T> {
    pub depth: usize,
    pub parent_bound: T,
    pub bound: T,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct BnbStats {
    pub nodes: usize,
    pub relaxations: usize,
    pub relaxation_failures: usize,
    pub elapsed: Duration,
}

#[derive(Clone, Debug)]
pub struct BnbOutcome<T> {
    pub status: SolveStatus<T>,
    pub levels: Option<Vec<usize>>,
    pub energy: Option<T>,
    /// Proven lower bound on the optimum.
    pub lower_bound: T,
    pub stats: BnbStats,
    pub trace: Vec<TraceEntry<T>>,
}

/// Minimizes energy over level assignments.
///
/// Each dive starts from the open node with the smallest bound and follows
/// the child holding the rounded-up relaxed speed; the sibling is left open.
/// A node whose relaxation fails numerically inherits its parent's bound and
/// is split on its widest interval. The search stops early when the slowest
/// node so far would overrun the budget.
pub fn solve_bnb<T: Scalar, P: LevelProblem<T>>(
    problem: &P,
    mut opts: BnbOptions<'_, T>,
) -> Result<BnbOutcome<T>> {
    let started = Instant::now();
    let mut stats = BnbStats::default();
    let mut trace = Vec::new();
    let mut best: Option<(Vec<usize>, T)> = None;

    let offer = |levels: Vec<usize>, best: &mut Option<(Vec<usize>, T)>, opts: &mut BnbOptions<'_, T>| {
        if let Some(e) = problem.evaluate(&levels) {
            if best.as_ref().map_or(true, |(_, b)| e < *b) {
                if let Some(cb) = opts.on_incumbent.as_mut() {
                    cb(&levels, e);
                }
                *best = Some((levels, e));
            }
        }
    };
    let cutoff = opts.cutoff;
    let pruned = |bound: T, best: &Option<(Vec<usize>, T)>, gap: T| {
        let limit = match (best, cutoff) {
            (Some((_, b)), Some(c)) => b.min(c),
            (Some((_, b)), None) => *b,
            (None, Some(c)) => c,
            (None, None) => return false,
        };
        bound >= limit - gap * limit.abs()
    };

    let mut open = vec![problem.root()];
    let mut dive: Option<BnbNode<T>> = None;
    let mut timed_out = false;
    let mut slowest = Duration::ZERO;
    loop {
        let node = match dive.take() {
            Some(nd) => nd,
            None => match take_best(&mut open) {
                Some(nd) => nd,
                None => break,
            },
        };
        let elapsed = started.elapsed();
        if elapsed + slowest >= opts.time_budget {
            open.push(node);
            timed_out = true;
            break;
        }
        let node_started = Instant::now();
        stats.nodes += 1;
        if pruned(node.parent_bound, &best, opts.rel_gap) {
            continue;
        }
        if node.is_leaf() {
            offer(node.lo.clone(), &mut best, &mut opts);
            continue;
        }
        stats.relaxations += 1;
        let relaxed = match problem.relax(&node) {
            Ok(Some(r)) => Some(r),
            Ok(None) => {
                if opts.record_trace {
                    trace.push(TraceEntry {
                        depth: node.depth,
                        parent_bound: node.parent_bound,
                        bound: T::infinity(),
                    });
                }
                continue;
            }
            Err(Error::NumericalFailure(_)) => {
                stats.relaxation_failures += 1;
                None
            }
            Err(e) => return Err(e),
        };
        let bound = relaxed.as_ref().map_or(node.parent_bound, |r| r.bound.max(node.parent_bound));
        if opts.record_trace {
            trace.push(TraceEntry { depth: node.depth, parent_bound: node.parent_bound, bound });
        }
        if let Some(r) = &relaxed {
            for c in problem.candidates(&node, r) {
                offer(c, &mut best, &mut opts);
            }
        }
        if pruned(bound, &best, opts.rel_gap) {
            continue;
        }

        let (j, split) = match &relaxed {
            Some(r) => choose_branch(problem, &node, r),
            None => widest(&node),
        };
        // `lower` keeps lo..split-1, `upper` keeps split..hi
        let mut lower = node.clone();
        lower.hi[j] = split - 1;
        let mut upper = node.clone();
        upper.lo[j] = split;
        for c in [&mut lower, &mut upper] {
            c.parent_bound = bound;
            c.depth = node.depth + 1;
        }
        let up_first = relaxed.as_ref().map_or(true, |r| {
            let target = round_up_in(problem.levels(), r.speeds[j], node.lo[j], node.hi[j]);
            target >= split
        });
        let (first, second) = if up_first { (upper, lower) } else { (lower, upper) };
        open.push(second);
        dive = Some(first);
        // the root does extra heuristic work
        if node.depth > 0 {
            slowest = slowest.max(node_started.elapsed());
        }
    }
    stats.elapsed = started.elapsed();

    let open_bound = open
        .iter()
        .map(|nd| nd.parent_bound)
        .fold(T::infinity(), T::min);
    let (levels, energy) = match best {
        Some((l, e)) => (Some(l), Some(e)),
        None => (None, None),
    };
    let status = if timed_out {
        SolveStatus::TimeLimit {
            incumbent: energy,
            lower_bound: open_bound.min(energy.unwrap_or(T::infinity())),
        }
    } else if energy.is_some() {
        SolveStatus::Optimal
    } else {
        SolveStatus::Infeasible
    };
    let lower_bound = match status {
        SolveStatus::TimeLimit { lower_bound, .. } => lower_bound,
        SolveStatus::Optimal => energy.unwrap(),
        _ => T::infinity(),
    };
    Ok(BnbOutcome { status, levels, energy, lower_bound, stats, trace })
}

fn take_best<T: Scalar>(open: &mut Vec<BnbNode<T>>) -> Option<BnbNode<T>> {
    let best = (0..open.len()).min_by(|&a, &b| {
        open[a]
            .parent_bound
            .partial_cmp(&open[b].parent_bound)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(open[b].depth.cmp(&open[a].depth))
    })?;
    Some(open.swap_remove(best))
}

fn round_up_in<T: Scalar>(levels: &[T], speed: T, lo: usize, hi: usize) -> usize {
    let target = speed * (T::one() - T::lit(1e-9));
    (lo..=hi).find(|&l| levels[l] >= target).unwrap_or(hi)
}

/// Task with the largest energy spread between rounding its relaxed speed down
/// and up. Falls back to the widest interval when every relaxed speed sits on
/// a level.
fn choose_branch<T: Scalar, P: LevelProblem<T>>(
    problem: &P,
    node: &BnbNode<T>,
    r: &NodeRelaxation<T>,
) -> (usize, usize) {
    let levels = problem.levels();
    let mut pick: Option<(T, usize, usize)> = None;
    for j in 0..node.lo.len() {
        let (lo, hi) = (node.lo[j], node.hi[j]);
        if lo == hi {
            continue;
        }
        let up = round_up_in(levels, r.speeds[j], lo, hi);
        if up == lo || (levels[up] - r.speeds[j]).abs() <= T::lit(1e-9) * levels[up] {
            continue;
        }
        let score = problem.spread(j, up - 1, up);
        if pick.map_or(true, |(s, _, _)| score > s) {
            pick = Some((score, j, up));
        }
    }
    match pick {
        Some((_, j, up)) => (j, up),
        None => widest(node),
    }
}

fn widest<T: Scalar>(node: &BnbNode<T>) -> (usize, usize) {
    let j = (0..node.lo.len())
        .max_by_key(|&j| (node.hi[j] - node.lo[j], std::cmp::Reverse(j)))
        .unwrap();
    (j, node.lo[j] + (node.hi[j] - node.lo[j] + 1) / 2)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent tasks with a budget on total time: tiny knapsack-like model
    /// solved by enumeration in the test.
    struct Budgeted {
        weights: Vec<f64>,
        levels: Vec<f64>,
        budget: f64,
    }

    impl Budgeted {
        fn time(&self, l: &[usize]) -> f64 {
            l.iter().enumerate().map(|(j, &i)| self.weights[j] / self.levels[i]).sum()
        }
        fn energy(&self, l: &[usize]) -> f64 {
            l.iter().enumerate().map(|(j, &i)| self.weights[j] * self.levels[i] * self.levels[i]).sum()
        }
    }

    impl LevelProblem<f64> for Budgeted {
        fn tasks(&self) -> usize {
            self.weights.len()
        }
        fn levels(&self) -> &[f64] {
            &self.levels
        }
        fn relax(&self, node: &BnbNode<f64>) -> Result<Option<NodeRelaxation<f64>>> {
            // weak but valid bound: every task at its slowest admissible level
            let slow: Vec<usize> = node.lo.clone();
            let fast: Vec<usize> = node.hi.clone();
            if self.time(&fast) > self.budget {
                return Ok(None);
            }
            Ok(Some(NodeRelaxation {
                bound: self.energy(&slow),
                speeds: node.lo.iter().zip(&node.hi).map(|(&a, &b)| 0.5 * (self.levels[a] + self.levels[b])).collect(),
            }))
        }
        fn evaluate(&self, l: &[usize]) -> Option<f64> {
            (self.time(l) <= self.budget).then(|| self.energy(l))
        }
        fn candidates(&self, node: &BnbNode<f64>, _: &NodeRelaxation<f64>) -> Vec<Vec<usize>> {
            vec![node.hi.clone()]
        }
        fn spread(&self, j: usize, a: usize, b: usize) -> f64 {
            self.weights[j] * (self.levels[b].powi(2) - self.levels[a].powi(2))
        }
    }

    fn enumerate(p: &Budgeted) -> Option<f64> {
        let n = p.weights.len();
        let k = p.levels.len();
        let mut best: Option<f64> = None;
        for code in 0..k.pow(n as u32) {
            let l: Vec<usize> = (0..n).map(|j| code / k.pow(j as u32) % k).collect();
            if let Some(e) = p.evaluate(&l) {
                best = Some(best.map_or(e, |b: f64| b.min(e)));
            }
        }
        best
    }

    #[test]
    fn matches_enumeration() {
        for budget in [2.0, 3.0, 4.5, 6.0, 9.0] {
            let p = Budgeted { weights: vec![1.0, 2.0, 1.5, 0.5], levels: vec![0.5, 1.0, 2.0], budget };
            let out = solve_bnb(&p, BnbOptions { record_trace: true, ..Default::default() }).unwrap();
            assert_eq!(out.energy, enumerate(&p), "budget {budget}");
            for t in &out.trace {
                assert!(t.bound >= t.parent_bound);
            }
        }
    }

    #[test]
    fn infeasible_when_fastest_misses() {
        let p = Budgeted { weights: vec![4.0], levels: vec![1.0, 2.0], budget: 1.0 };
        let out = solve_bnb(&p, BnbOptions::default()).unwrap();
        assert_eq!(out.status, SolveStatus::Infeasible);
        assert!(out.levels.is_none());
    }

    #[test]
    fn zero_budget_reports_time_limit() {
        let p = Budgeted { weights: vec![1.0, 1.0], levels: vec![1.0, 2.0], budget: 5.0 };
        let out = solve_bnb(&p, BnbOptions { time_budget: Duration::ZERO, ..Default::default() }).unwrap();
        assert!(matches!(out.status, SolveStatus::TimeLimit { incumbent: None, .. }));
    }

    #[test]
    fn incumbent_callback_sees_improvements() {
        let p = Budgeted { weights: vec![1.0, 2.0, 1.0], levels: vec![0.5, 1.0, 2.0], budget: 4.0 };
        let mut seen = Vec::new();
        let mut cb = |_: &[usize], e: f64| seen.push(e);
        let out = solve_bnb(&p, BnbOptions { on_incumbent: Some(&mut cb), ..Default::default() }).unwrap();
        assert!(seen.windows(2).all(|w| w[1] < w[0]));
        assert_eq!(seen.last().copied(), out.energy);
    }
}
