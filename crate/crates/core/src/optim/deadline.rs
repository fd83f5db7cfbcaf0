//! The deadline program over execution times `x_j` and completion times `d_j`:
//!
//! ```text
//! min  sum_j w_j^alpha x_j^(1-alpha)
//! s.t. x_j <= d_j <= D,  d_j + x_k <= d_k for (j,k) in E,
//!      lo_j <= x_j <= hi_j,  [sum_j x_j <= cap]
//! ```
//!
//! With an envelope, a task's energy term is replaced by the piecewise-linear
//! interpolation through its `(time, energy)` breakpoints.

use crate::error::{Error, Result};
use crate::graph::TaskGraph;
use crate::scalar::Scalar;

use super::convex::{solve_convex, ConvexOptions, ConvexProgram, PowerTerm};

/// Smallest execution time given to a task with positive weight.
const X_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct DeadlineProgram<'g, T> {
    graph: &'g TaskGraph<T>,
    order: Vec<usize>,
    lower: Vec<T>,
    upper: Vec<T>,
    deadline: T,
    volume_cap: Option<T>,
    /// Per task, `(time, energy)` breakpoints by increasing time; fewer than
    /// two keep the power term.
    envelope: Option<Vec<Vec<(T, T)>>>,
}

#[derive(Clone, Debug)]
pub struct DeadlineSolution<T> {
    pub x: Vec<T>,
    pub d: Vec<T>,
    pub energy: T,
    /// Certified lower bound on the program's optimum.
    pub lower_bound: T,
    pub newton_steps: usize,
}

impl<'g, T: Scalar> DeadlineProgram<'g, T> {
    /// Boxes `[w_j / s_max, w_j / s_min]` from the graph's speed model.
    pub fn new(graph: &'g TaskGraph<T>) -> Result<Self> {
        let (smin, smax) = (graph.speed_model().s_min(), graph.speed_model().s_max());
        let lower = graph.tasks().iter().map(|t| t.weight / smax).collect();
        let upper = graph.tasks().iter().map(|t| t.weight / smin).collect();
        Self::with_boxes(graph, lower, upper, graph.deadline())
    }

    /// Explicit execution-time boxes. Zero-weight tasks are pinned to `x = 0`.
    pub fn with_boxes(graph: &'g TaskGraph<T>, lower: Vec<T>, upper: Vec<T>, deadline: T) -> Result<Self> {
        let order = graph.topological_order()?;
        let floor = T::lit(X_FLOOR);
        let mut lower = lower;
        let mut upper = upper;
        for j in 0..graph.len() {
            if graph.weight(j) == T::zero() {
                lower[j] = T::zero();
                upper[j] = T::zero();
            } else {
                lower[j] = lower[j].max(floor);
                upper[j] = upper[j].max(lower[j]);
            }
        }
        Ok(DeadlineProgram { graph, order, lower, upper, deadline, volume_cap: None, envelope: None })
    }

    pub fn with_volume_cap(mut self, cap: T) -> Self {
        self.volume_cap = Some(cap);
        self
    }

    /// Breakpoints must lie on the task's energy curve inside its box, so
    /// that the interpolation bounds the curve from above.
    pub fn with_envelope(mut self, points: Vec<Vec<(T, T)>>) -> Self {
        self.envelope = Some(points);
        self
    }

    fn envelope_of(&self, j: usize) -> Option<&[(T, T)]> {
        self.envelope.as_ref().map(|e| e[j].as_slice()).filter(|p| p.len() >= 2)
    }

    /// Objective of the program at `x`: the energy, or its interpolation for
    /// enveloped tasks.
    pub fn objective_of(&self, x: &[T]) -> T {
        let alpha = self.graph.alpha();
        (0..self.graph.len())
            .map(|j| {
                let w = self.graph.weight(j);
                if let Some(points) = self.envelope_of(j) {
                    interpolate(points, x[j])
                } else if w == T::zero() {
                    T::zero()
                } else {
                    w.powf(alpha) * x[j].powf(T::one() - alpha)
                }
            })
            .sum()
    }

    pub fn deadline(&self) -> T {
        self.deadline
    }

    pub fn lower(&self) -> &[T] {
        &self.lower
    }

    pub fn upper(&self) -> &[T] {
        &self.upper
    }

    /// Whether the fastest admissible times meet the deadline and volume cap.
    pub fn is_feasible(&self) -> bool {
        let cp = self.graph.critical_path_in(&self.order, &self.lower);
        let vol: T = self.lower.iter().copied().sum();
        cp <= self.deadline && self.volume_cap.map_or(true, |c| vol <= c)
    }

    /// The program in generic form: variables `x_0..x_{n-1}, d_0..d_{n-1}`,
    /// then one epigraph variable per enveloped task.
    pub fn to_convex(&self) -> ConvexProgram<T> {
        let g = self.graph;
        let n = g.len();
        let alpha = g.alpha();
        let enveloped: Vec<usize> = (0..n).filter(|&j| self.envelope_of(j).is_some()).collect();
        let mut p = ConvexProgram::new(2 * n + enveloped.len());
        for j in 0..n {
            p.lower[j] = self.lower[j];
            p.upper[j] = self.upper[j];
            p.upper[n + j] = self.deadline;
            p.add_row(vec![(j, T::one()), (n + j, -T::one())], T::zero());
            let w = g.weight(j);
            if w > T::zero() && self.envelope_of(j).is_none() {
                p.power.push(PowerTerm { var: j, coef: w.powf(alpha), exponent: alpha - T::one() });
            }
        }
        for &(a, b) in g.edges() {
            p.add_row(vec![(n + a, T::one()), (b, T::one()), (n + b, -T::one())], T::zero());
        }
        if let Some(cap) = self.volume_cap {
            p.add_row((0..n).map(|j| (j, T::one())).collect(), cap);
        }
        for (k, &j) in enveloped.iter().enumerate() {
            let e = 2 * n + k;
            p.linear[e] = T::one();
            // e >= E_a + slope (x - x_a) on every segment
            for seg in self.envelope_of(j).unwrap().windows(2) {
                let ((xa, ea), (xb, eb)) = (seg[0], seg[1]);
                let slope = (eb - ea) / (xb - xa);
                p.add_row(vec![(j, slope), (e, -T::one())], slope * xa - ea);
            }
        }
        p
    }

    /// A point strictly inside every row and box, or `Infeasible`.
    ///
    /// Boundary-feasible programs (fastest times exactly on the deadline or the
    /// cap) get the offending right-hand side widened by a few ulps.
    fn strict_start(&self, deadline: &mut T, cap: &mut Option<T>) -> Result<Vec<T>> {
        let g = self.graph;
        let n = g.len();
        let eps = T::lit(1e-12).max(T::epsilon() * T::lit(64.0));
        let widen = T::one() + eps;
        let cp_lo = g.critical_path_in(&self.order, &self.lower);
        if cp_lo > *deadline {
            return Err(Error::Infeasible);
        }
        if cp_lo >= *deadline * (T::one() - eps) {
            *deadline = cp_lo.max(*deadline) * widen + T::min_positive_value();
        }
        let vol_lo: T = self.lower.iter().copied().sum();
        if let Some(c) = cap.as_mut() {
            if vol_lo > *c {
                return Err(Error::Infeasible);
            }
            if vol_lo >= *c * (T::one() - eps) {
                *c = vol_lo.max(*c) * widen + T::min_positive_value();
            }
        }
        let mut theta = T::lit(0.5);
        let mut x = vec![T::zero(); n];
        let mut finish;
        loop {
            for j in 0..n {
                x[j] = self.lower[j] + theta * (self.upper[j] - self.lower[j]);
            }
            finish = g.earliest_completions_in(&self.order, &x);
            let cp = finish.iter().copied().fold(T::zero(), T::max);
            let vol: T = x.iter().copied().sum();
            if cp < *deadline && cap.map_or(true, |c| vol < c) {
                break;
            }
            theta = theta * T::lit(0.5);
            if theta < T::lit(1e-30) {
                return Err(Error::NumericalFailure("no interior start point".into()));
            }
        }
        // depth level of each task along the longest edge chain
        let mut level = vec![1usize; n];
        for &j in &self.order {
            for &k in g.successors(j) {
                level[k] = level[k].max(level[j] + 1);
            }
        }
        let h = T::from_usize(level.iter().copied().max().unwrap_or(1) + 1).unwrap();
        let cp = finish.iter().copied().fold(T::zero(), T::max);
        let delta = *deadline - cp;
        let mut z = x;
        z.extend((0..n).map(|j| finish[j] + delta * T::from_usize(level[j]).unwrap() / h));
        Ok(z)
    }

    pub fn solve(&self, opts: &ConvexOptions<T>) -> Result<DeadlineSolution<T>> {
        let n = self.graph.len();
        let mut deadline = self.deadline;
        let mut cap = self.volume_cap;
        let start = self.strict_start(&mut deadline, &mut cap)?;
        let program = DeadlineProgram { deadline, volume_cap: cap, ..self.clone() }.to_convex();
        let opts = ConvexOptions { feas_relax: T::zero(), ..*opts };
        let mut start = start;
        for j in 0..n {
            if let Some(points) = self.envelope_of(j) {
                let e = interpolate(points, start[j]);
                start.push(e + T::lit(1e-3) * e.abs() + T::one());
            }
        }
        let sol = solve_convex(&program, Some(&start), &opts)?;
        let x = &sol.z[..n];
        let d = &sol.z[n..2 * n];
        Ok(DeadlineSolution {
            energy: self.objective_of(x),
            x: x.to_vec(),
            d: d.to_vec(),
            lower_bound: sol.lower_bound,
            newton_steps: sol.newton_steps,
        })
    }
}

/// Largest of the segment lines at `x`, the interpolation inside the
/// breakpoints and its linear extension outside.
fn interpolate<T: Scalar>(points: &[(T, T)], x: T) -> T {
    points
        .windows(2)
        .map(|seg| {
            let ((xa, ea), (xb, eb)) = (seg[0], seg[1]);
            ea + (eb - ea) / (xb - xa) * (x - xa)
        })
        .fold(T::neg_infinity(), T::max)
}
