//! Problem instances: the precedence DAG, task weights, deadline, speed model
//! and optional core mapping, plus the structural algorithms on them.

mod instance;
mod paths;
mod sp;

use std::collections::HashSet;
use std::fmt;

pub use instance::{InstanceFile, SpeedsSpec, TaskSpec};
pub use paths::Closure;
pub use sp::{sp_decompose, SpDecomposition, SpNode};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Relative slack granted when comparing a critical path against the deadline.
pub const DEADLINE_RTOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Task<T> {
    pub id: String,
    /// Nominal execution time at unit speed.
    pub weight: T,
    pub core: Option<usize>,
}

impl<T: Scalar> Task<T> {
    pub fn new(id: impl Into<String>, weight: T) -> Self {
        Task { id: id.into(), weight, core: None }
    }

    pub fn on_core(mut self, core: usize) -> Self {
        self.core = Some(core);
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Speeds<T> {
    Continuous { min: T, max: T },
    /// Strictly increasing ladder `v_1 < ... < v_k`.
    Discrete(Vec<T>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpeedModel<T> {
    /// Power exponent: a core at speed `s` draws `s^alpha`.
    pub alpha: T,
    pub speeds: Speeds<T>,
}

impl<T: Scalar> SpeedModel<T> {
    pub fn continuous(alpha: T, min: T, max: T) -> Self {
        SpeedModel { alpha, speeds: Speeds::Continuous { min, max } }
    }

    pub fn discrete(alpha: T, levels: Vec<T>) -> Self {
        SpeedModel { alpha, speeds: Speeds::Discrete(levels) }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self.speeds, Speeds::Discrete(_))
    }

    pub fn levels(&self) -> Option<&[T]> {
        match &self.speeds {
            Speeds::Discrete(v) => Some(v),
            Speeds::Continuous { .. } => None,
        }
    }

    pub fn s_min(&self) -> T {
        match &self.speeds {
            Speeds::Continuous { min, .. } => *min,
            Speeds::Discrete(v) => v[0],
        }
    }

    pub fn s_max(&self) -> T {
        match &self.speeds {
            Speeds::Continuous { max, .. } => *max,
            Speeds::Discrete(v) => v[v.len() - 1],
        }
    }

    /// Largest ratio between consecutive ladder levels; 1 for a single level
    /// or a continuous model.
    pub fn max_ratio(&self) -> T {
        match &self.speeds {
            Speeds::Discrete(v) => v
                .windows(2)
                .map(|p| p[1] / p[0])
                .fold(T::one(), |a, b| a.max(b)),
            Speeds::Continuous { .. } => T::one(),
        }
    }

    /// The continuous model spanning `[s_min, s_max]` of this one.
    pub fn relaxed(&self) -> SpeedModel<T> {
        SpeedModel::continuous(self.alpha, self.s_min(), self.s_max())
    }

    /// Energy of running `weight` units of work at `speed`: `w * s^(alpha-1)`.
    #[inline]
    pub fn energy(&self, weight: T, speed: T) -> T {
        if weight == T::zero() {
            return T::zero();
        }
        weight * speed.powf(self.alpha - T::one())
    }

    /// Index of the smallest level `>= speed`, tolerating `rtol` of noise, and
    /// clamped to the top level. Panics on a continuous model.
    pub fn round_up(&self, speed: T, rtol: T) -> usize {
        let levels = self.levels().expect("round_up needs a discrete ladder");
        let target = speed * (T::one() - rtol);
        levels
            .iter()
            .position(|&v| v >= target)
            .unwrap_or(levels.len() - 1)
    }

    /// Whether `speed` may be used, up to a relative tolerance.
    pub fn is_eligible(&self, speed: T, rtol: T) -> bool {
        match &self.speeds {
            Speeds::Continuous { min, max } => {
                speed >= *min * (T::one() - rtol) && speed <= *max * (T::one() + rtol)
            }
            Speeds::Discrete(v) => v.iter().any(|&l| (speed - l).abs() <= rtol * l),
        }
    }

    fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.alpha >= T::one()) || !self.alpha.is_finite() {
            out.push(format!("alpha must be >= 1, got {}", self.alpha));
        }
        match &self.speeds {
            Speeds::Continuous { min, max } => {
                if !(*min > T::zero()) || !min.is_finite() {
                    out.push(format!("s_min must be > 0, got {min}"));
                }
                if !(*max >= *min) || !max.is_finite() {
                    out.push(format!("s_max must be >= s_min, got {max}"));
                }
            }
            Speeds::Discrete(v) => {
                if v.is_empty() {
                    out.push("speed ladder is empty".into());
                } else if !(v[0] > T::zero()) || v.iter().any(|x| !x.is_finite()) {
                    out.push("speed levels must be finite and > 0".into());
                }
                if v.windows(2).any(|p| !(p[1] > p[0])) {
                    out.push("speed levels must be strictly increasing".into());
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    EmptyGraph,
    CycleDetected,
    DanglingEdge { from: String, to: String },
    DuplicateTaskId { id: String },
    InvalidWeight { task: String },
    CoreIndexOutOfRange { task: String, core: usize, cores: usize },
    MixedMapping,
    NonPositiveDeadline,
    NonPositiveCores,
    InvalidSpeedModel { reason: String },
    InvalidCoreOrder { reason: String },
}

impl Violation {
    pub fn code(&self) -> &'static str {
        match self {
            Violation::EmptyGraph => "EmptyGraph",
            Violation::CycleDetected => "CycleDetected",
            Violation::DanglingEdge { .. } => "DanglingEdge",
            Violation::DuplicateTaskId { .. } => "DuplicateTaskId",
            Violation::InvalidWeight { .. } => "InvalidWeight",
            Violation::CoreIndexOutOfRange { .. } => "CoreIndexOutOfRange",
            Violation::MixedMapping => "MixedMapping",
            Violation::NonPositiveDeadline => "NonPositiveDeadline",
            Violation::NonPositiveCores => "NonPositiveCores",
            Violation::InvalidSpeedModel { .. } => "InvalidSpeedModel",
            Violation::InvalidCoreOrder { .. } => "InvalidCoreOrder",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DanglingEdge { from, to } => write!(f, "DanglingEdge({from} -> {to})"),
            Violation::DuplicateTaskId { id } => write!(f, "DuplicateTaskId({id})"),
            Violation::InvalidWeight { task } => write!(f, "InvalidWeight({task})"),
            Violation::CoreIndexOutOfRange { task, core, cores } => {
                write!(f, "CoreIndexOutOfRange({task}: core {core} >= {cores})")
            }
            Violation::InvalidSpeedModel { reason } => write!(f, "InvalidSpeedModel({reason})"),
            Violation::InvalidCoreOrder { reason } => write!(f, "InvalidCoreOrder({reason})"),
            other => f.write_str(other.code()),
        }
    }
}

/// Which of the two problem classes an instance belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProblemClass {
    /// Every task carries a core; per-core order is encoded as edges.
    Mapping,
    /// No task carries a core; the algorithm picks cores and start times.
    Scheduling,
}

/// Precedence-constrained task system with a global deadline.
///
/// Edges are index pairs `(j, k)`: `k` cannot start before `j` completes.
/// Construction never fails; [`TaskGraph::validate`] reports problems and the
/// algorithms reject invalid graphs up front.
#[derive(Clone, Debug)]
pub struct TaskGraph<T> {
    tasks: Vec<Task<T>>,
    edges: Vec<(usize, usize)>,
    succ: Vec<Vec<usize>>,
    pred: Vec<Vec<usize>>,
    deadline: T,
    speed_model: SpeedModel<T>,
    cores: Option<usize>,
    core_order: Option<Vec<Vec<usize>>>,
}

impl<T: Scalar> TaskGraph<T> {
    pub fn new(
        tasks: Vec<Task<T>>,
        edges: Vec<(usize, usize)>,
        deadline: T,
        speed_model: SpeedModel<T>,
        cores: Option<usize>,
    ) -> Self {
        let n = tasks.len();
        let mut succ = vec![Vec::new(); n];
        let mut pred = vec![Vec::new(); n];
        let mut seen = HashSet::with_capacity(edges.len());
        let mut kept = Vec::with_capacity(edges.len());
        for &(a, b) in &edges {
            if !seen.insert((a, b)) {
                continue;
            }
            kept.push((a, b));
            if a < n && b < n {
                succ[a].push(b);
                pred[b].push(a);
            }
        }
        TaskGraph {
            tasks,
            edges: kept,
            succ,
            pred,
            deadline,
            speed_model,
            cores,
            core_order: None,
        }
    }

    /// Builds the graph and fails with every violation found.
    pub fn try_new(
        tasks: Vec<Task<T>>,
        edges: Vec<(usize, usize)>,
        deadline: T,
        speed_model: SpeedModel<T>,
        cores: Option<usize>,
    ) -> Result<Self> {
        let g = Self::new(tasks, edges, deadline, speed_model, cores);
        g.ensure_valid()?;
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn tasks(&self) -> &[Task<T>] {
        &self.tasks
    }

    pub fn task(&self, j: usize) -> &Task<T> {
        &self.tasks[j]
    }

    pub fn weight(&self, j: usize) -> T {
        self.tasks[j].weight
    }

    pub fn weights(&self) -> Vec<T> {
        self.tasks.iter().map(|t| t.weight).collect()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn successors(&self, j: usize) -> &[usize] {
        &self.succ[j]
    }

    pub fn predecessors(&self, j: usize) -> &[usize] {
        &self.pred[j]
    }

    pub fn deadline(&self) -> T {
        self.deadline
    }

    pub fn speed_model(&self) -> &SpeedModel<T> {
        &self.speed_model
    }

    pub fn alpha(&self) -> T {
        self.speed_model.alpha
    }

    pub fn cores(&self) -> Option<usize> {
        self.cores
    }

    pub fn core_order(&self) -> Option<&[Vec<usize>]> {
        self.core_order.as_deref()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.tasks.iter().position(|t| t.id == id)
    }

    pub fn with_deadline(&self, deadline: T) -> Self {
        let mut g = self.clone();
        g.deadline = deadline;
        g
    }

    pub fn with_speed_model(&self, speed_model: SpeedModel<T>) -> Self {
        let mut g = self.clone();
        g.speed_model = speed_model;
        g
    }

    pub fn with_cores(&self, cores: Option<usize>) -> Self {
        let mut g = self.clone();
        g.cores = cores;
        g
    }

    /// Same instance with every mapping removed.
    pub fn without_mapping(&self) -> Self {
        let mut g = self.clone();
        for t in &mut g.tasks {
            t.core = None;
        }
        g.core_order = None;
        g
    }

    /// Same tasks and precedence, different edge set (keeps mapping data).
    pub fn with_edges(&self, edges: Vec<(usize, usize)>) -> Self {
        let mut g = Self::new(
            self.tasks.clone(),
            edges,
            self.deadline,
            self.speed_model.clone(),
            self.cores,
        );
        g.core_order = self.core_order.clone();
        g
    }

    pub fn class(&self) -> ProblemClass {
        if !self.tasks.is_empty() && self.tasks.iter().all(|t| t.core.is_some()) {
            ProblemClass::Mapping
        } else {
            ProblemClass::Scheduling
        }
    }

    /// Minimum achievable critical path: every task at `s_max`.
    pub fn min_critical_path(&self) -> Result<T> {
        let smax = self.speed_model.s_max();
        let times: Vec<T> = self.tasks.iter().map(|t| t.weight / smax).collect();
        self.critical_path_time(&times)
    }

    /// Whether a critical path of `length` meets the deadline.
    #[inline]
    pub fn fits_deadline(&self, length: T) -> bool {
        length <= self.deadline * (T::one() + deadline_rtol::<T>())
    }

    /// Every well-formedness violation, empty iff the instance is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let n = self.tasks.len();
        if n == 0 {
            out.push(Violation::EmptyGraph);
        }
        let mut ids = HashSet::with_capacity(n);
        for t in &self.tasks {
            if !ids.insert(t.id.as_str()) {
                out.push(Violation::DuplicateTaskId { id: t.id.clone() });
            }
            if !(t.weight >= T::zero()) || !t.weight.is_finite() {
                out.push(Violation::InvalidWeight { task: t.id.clone() });
            }
        }
        for &(a, b) in &self.edges {
            if a >= n || b >= n {
                let name = |i: usize| {
                    self.tasks.get(i).map_or_else(|| format!("#{i}"), |t| t.id.clone())
                };
                out.push(Violation::DanglingEdge { from: name(a), to: name(b) });
            }
        }
        if self.topological_order().is_err() {
            out.push(Violation::CycleDetected);
        }
        if !(self.deadline > T::zero()) || !self.deadline.is_finite() {
            out.push(Violation::NonPositiveDeadline);
        }
        if self.cores == Some(0) {
            out.push(Violation::NonPositiveCores);
        }
        for reason in self.speed_model.violations() {
            out.push(Violation::InvalidSpeedModel { reason });
        }
        let mapped = self.tasks.iter().filter(|t| t.core.is_some()).count();
        if mapped != 0 && mapped != n {
            out.push(Violation::MixedMapping);
        }
        if let Some(m) = self.cores {
            for t in &self.tasks {
                if let Some(c) = t.core {
                    if c >= m {
                        out.push(Violation::CoreIndexOutOfRange {
                            task: t.id.clone(),
                            core: c,
                            cores: m,
                        });
                    }
                }
            }
        }
        if let Some(order) = &self.core_order {
            for (c, seq) in order.iter().enumerate() {
                for &j in seq {
                    if j >= n {
                        out.push(Violation::InvalidCoreOrder {
                            reason: format!("unknown task #{j} on core {c}"),
                        });
                    } else if self.tasks[j].core != Some(c) {
                        out.push(Violation::InvalidCoreOrder {
                            reason: format!("task {} listed on core {c}", self.tasks[j].id),
                        });
                    }
                }
            }
        }
        out
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else if v == [Violation::CycleDetected] {
            Err(Error::Cycle)
        } else {
            Err(Error::InvalidInstance(v))
        }
    }

    /// Adds a chain edge between consecutive tasks of every core sequence.
    ///
    /// Each task must appear in exactly one sequence. The sequence index is the
    /// core; tasks get their `core` field set accordingly.
    pub fn augment_with_mapping_order(&self, orders: &[Vec<usize>]) -> Result<Self> {
        let n = self.len();
        let mut seen = vec![false; n];
        for seq in orders {
            for &j in seq {
                if j >= n {
                    return Err(Error::MalformedOrder(format!("unknown task #{j}")));
                }
                if std::mem::replace(&mut seen[j], true) {
                    return Err(Error::MalformedOrder(format!(
                        "task {} appears twice",
                        self.tasks[j].id
                    )));
                }
            }
        }
        if let Some(j) = seen.iter().position(|s| !s) {
            return Err(Error::MalformedOrder(format!(
                "task {} is not on any core",
                self.tasks[j].id
            )));
        }
        if let Some(m) = self.cores {
            if orders.len() > m {
                return Err(Error::MalformedOrder(format!(
                    "{} core sequences for {m} cores",
                    orders.len()
                )));
            }
        }
        let mut edges = self.edges.clone();
        for seq in orders {
            edges.extend(seq.windows(2).map(|p| (p[0], p[1])));
        }
        let mut g = self.with_edges(edges);
        for (c, seq) in orders.iter().enumerate() {
            for &j in seq {
                g.tasks[j].core = Some(c);
            }
        }
        g.core_order = Some(orders.to_vec());
        if g.topological_order().is_err() {
            return Err(Error::InfeasibleOrder);
        }
        Ok(g)
    }
}

/// Deadline tolerance scaled to the precision of `T`.
pub(crate) fn deadline_rtol<T: Scalar>() -> T {
    T::lit(DEADLINE_RTOL).max(T::epsilon() * T::lit(64.0))
}
