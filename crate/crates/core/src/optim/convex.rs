//! Primal log-barrier interior-point method for separable objectives
//! `sum_t c_t * z[v_t]^(-p_t) + g^T z` under linear inequalities and boxes.
//!
//! Newton systems are solved with a sparse Cholesky factorization. Rows with
//! many nonzeros (the volume row) are rewritten as a chain of running-sum
//! variables so that the Newton matrix stays sparse.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::sparse::SparseCholesky;

/// Rows with more nonzeros than this are rewritten as running-sum chains.
const DENSE_ROW: usize = 24;

/// `coeffs . z <= rhs`
#[derive(Clone, Debug)]
pub struct Row<T> {
    pub coeffs: Vec<(usize, T)>,
    pub rhs: T,
}

/// `coef * z[var]^(-exponent)`, convex on `z > 0` for `coef, exponent >= 0`.
#[derive(Clone, Copy, Debug)]
pub struct PowerTerm<T> {
    pub var: usize,
    pub coef: T,
    pub exponent: T,
}

#[derive(Clone, Debug)]
pub struct ConvexProgram<T> {
    pub n_vars: usize,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
    pub rows: Vec<Row<T>>,
    pub power: Vec<PowerTerm<T>>,
    pub linear: Vec<T>,
}

impl<T: Scalar> ConvexProgram<T> {
    pub fn new(n_vars: usize) -> Self {
        ConvexProgram {
            n_vars,
            lower: vec![T::neg_infinity(); n_vars],
            upper: vec![T::infinity(); n_vars],
            rows: Vec::new(),
            power: Vec::new(),
            linear: vec![T::zero(); n_vars],
        }
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, T)>, rhs: T) {
        self.rows.push(Row { coeffs, rhs });
    }

    pub fn objective(&self, z: &[T]) -> T {
        let mut f = T::zero();
        for t in &self.power {
            f += power_value(t, z[t.var]);
        }
        for (g, v) in self.linear.iter().zip(z) {
            if *g != T::zero() {
                f += *g * *v;
            }
        }
        f
    }

    /// Largest violation `coeffs . z - rhs` over rows and boxes (<= 0 when feasible).
    pub fn max_violation(&self, z: &[T]) -> T {
        let mut worst = T::neg_infinity();
        for r in &self.rows {
            let lhs: T = r.coeffs.iter().map(|&(v, c)| c * z[v]).sum();
            worst = worst.max(lhs - r.rhs);
        }
        for (j, &v) in z.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        worst
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ConvexOptions<T> {
    /// Relative duality-gap target.
    pub tol: T,
    /// Every row's right-hand side is loosened by `feas_relax * (1 + |rhs|)`
    /// so that programs with an empty interior remain solvable.
    pub feas_relax: T,
    pub max_newton: usize,
}

impl<T: Scalar> Default for ConvexOptions<T> {
    fn default() -> Self {
        ConvexOptions {
            tol: T::lit(T::SOLVER_TOL),
            feas_relax: T::lit(T::SOLVER_TOL * 0.1),
            max_newton: 3000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConvexSolution<T> {
    pub z: Vec<T>,
    pub objective: T,
    /// Certified lower bound on the optimum of the (relaxed) program.
    pub lower_bound: T,
    pub newton_steps: usize,
}

/// Minimizes the program. `start` must be strictly feasible for the relaxed
/// rows when given; otherwise a phase-1 problem is solved first.
pub fn solve_convex<T: Scalar>(
    program: &ConvexProgram<T>,
    start: Option<&[T]>,
    opts: &ConvexOptions<T>,
) -> Result<ConvexSolution<T>> {
    let reduced = Reduced::new(program, opts.feas_relax)?;
    let y0 = match start {
        Some(z) => {
            let y = reduced.restrict(z);
            if !reduced.strictly_feasible(&y) {
                return Err(Error::NumericalFailure("start point is not interior".into()));
            }
            y
        }
        None => reduced.phase_one(opts)?,
    };
    let (y, steps, gap) = reduced.minimize(y0, opts)?;
    let z = reduced.expand(&y);
    let objective = program.objective(&z);
    Ok(ConvexSolution { lower_bound: objective - gap, objective, z, newton_steps: steps })
}

#[inline]
fn power_value<T: Scalar>(t: &PowerTerm<T>, z: T) -> T {
    if t.exponent == T::zero() {
        t.coef
    } else {
        t.coef * z.powf(-t.exponent)
    }
}

/// `sum_k c_k y_k <= rhs` as `u_1 >= c_1 y_1`, `u_k >= u_{k-1} + c_k y_k`,
/// `u_K <= rhs`, with `u_k` stored from `first_aux` on.
struct Chain<T> {
    first_aux: usize,
    coeffs: Vec<(usize, T)>,
    rhs: T,
}

/// Program over the free variables only, with relaxed right-hand sides.
/// Auxiliary chain variables follow the `n_base` free ones.
struct Reduced<T> {
    n: usize,
    n_base: usize,
    chains: Vec<Chain<T>>,
    free: Vec<usize>,
    fixed_value: Vec<Option<T>>,
    lower: Vec<T>,
    upper: Vec<T>,
    rows: Vec<Row<T>>,
    power: Vec<PowerTerm<T>>,
    linear: Vec<T>,
    constant: T,
}

impl<T: Scalar> Reduced<T> {
    fn new(p: &ConvexProgram<T>, relax: T) -> Result<Self> {
        let width_tol = T::epsilon() * T::lit(512.0);
        let mut map = vec![usize::MAX; p.n_vars];
        let mut free = Vec::new();
        let mut fixed_value = vec![None; p.n_vars];
        for j in 0..p.n_vars {
            let (lo, hi) = (p.lower[j], p.upper[j]);
            if lo > hi + width_tol * (T::one() + hi.abs()) {
                return Err(Error::Infeasible);
            }
            if hi.is_finite() && hi - lo <= width_tol * (T::one() + hi.abs()) {
                fixed_value[j] = Some(T::lit(0.5) * (lo + hi));
            } else {
                map[j] = free.len();
                free.push(j);
            }
        }
        let mut rows = Vec::with_capacity(p.rows.len());
        for r in &p.rows {
            let mut rhs = r.rhs + relax * (T::one() + r.rhs.abs());
            let mut coeffs = Vec::with_capacity(r.coeffs.len());
            for &(v, c) in &r.coeffs {
                match fixed_value[v] {
                    Some(x) => rhs -= c * x,
                    None => coeffs.push((map[v], c)),
                }
            }
            if coeffs.is_empty() {
                if rhs < T::zero() {
                    return Err(Error::Infeasible);
                }
                continue;
            }
            rows.push(Row { coeffs, rhs });
        }
        let n_base = free.len();
        let mut n = n_base;
        let mut chains = Vec::new();
        let mut lower: Vec<T> = free.iter().map(|&j| p.lower[j]).collect();
        let mut upper: Vec<T> = free.iter().map(|&j| p.upper[j]).collect();
        let mut kept = Vec::with_capacity(rows.len());
        for r in rows {
            if r.coeffs.len() <= DENSE_ROW {
                kept.push(r);
                continue;
            }
            let first_aux = n;
            for (k, &(v, c)) in r.coeffs.iter().enumerate() {
                let u = first_aux + k;
                let mut coeffs = vec![(v, c), (u, -T::one())];
                if k > 0 {
                    coeffs.push((u - 1, T::one()));
                }
                kept.push(Row { coeffs, rhs: T::zero() });
            }
            n += r.coeffs.len();
            kept.push(Row { coeffs: vec![(n - 1, T::one())], rhs: r.rhs });
            lower.resize(n, T::neg_infinity());
            upper.resize(n, T::infinity());
            chains.push(Chain { first_aux, coeffs: r.coeffs, rhs: r.rhs });
        }
        let rows = kept;
        let mut constant = T::zero();
        let mut power = Vec::new();
        for t in &p.power {
            match fixed_value[t.var] {
                Some(x) => constant += power_value(t, x),
                None => power.push(PowerTerm { var: map[t.var], ..*t }),
            }
        }
        let mut linear = vec![T::zero(); n];
        for (j, &g) in p.linear.iter().enumerate() {
            match fixed_value[j] {
                Some(x) => constant += g * x,
                None => linear[map[j]] = g,
            }
        }
        Ok(Reduced {
            n,
            n_base,
            chains,
            lower,
            upper,
            free,
            fixed_value,
            rows,
            power,
            linear,
            constant,
        })
    }

    fn restrict(&self, z: &[T]) -> Vec<T> {
        let mut y: Vec<T> = self.free.iter().map(|&j| z[j]).collect();
        self.lift(&mut y);
        y
    }

    /// Appends chain values with equal slack in every link; strictly
    /// feasible whenever the original dense row is.
    fn lift(&self, y: &mut Vec<T>) {
        y.truncate(self.n_base);
        y.resize(self.n, T::zero());
        for ch in &self.chains {
            let total: T = ch.coeffs.iter().map(|&(v, c)| c * y[v]).sum();
            let len = ch.coeffs.len();
            let delta = (ch.rhs - total) / T::from_usize(len + 1).unwrap();
            let mut run = T::zero();
            for (k, &(v, c)) in ch.coeffs.iter().enumerate() {
                run += c * y[v] + delta;
                y[ch.first_aux + k] = run;
            }
        }
    }

    fn expand(&self, y: &[T]) -> Vec<T> {
        let mut z: Vec<T> = self.fixed_value.iter().map(|v| v.unwrap_or(T::zero())).collect();
        for (k, &j) in self.free.iter().enumerate() {
            z[j] = y[k];
        }
        z
    }

    fn strictly_feasible(&self, y: &[T]) -> bool {
        self.rows.iter().all(|r| slack(r, y) > T::zero())
            && y.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&v, (&lo, &hi))| v > lo && v < hi)
    }

    /// Finds a strictly feasible point by minimizing a shared slack `s`
    /// in `coeffs . y - s <= rhs`.
    fn phase_one(&self, opts: &ConvexOptions<T>) -> Result<Vec<T>> {
        let n = self.n;
        let mut y0 = vec![T::zero(); self.n_base];
        for k in 0..self.n_base {
            let (lo, hi) = (self.lower[k], self.upper[k]);
            y0[k] = match (lo.is_finite(), hi.is_finite()) {
                (true, true) => T::lit(0.5) * (lo + hi),
                (true, false) => lo + T::one().max(lo.abs()),
                (false, true) => hi - T::one().max(hi.abs()),
                (false, false) => T::zero(),
            };
        }
        self.lift(&mut y0);
        if self.strictly_feasible(&y0) && self.margin(&y0) >= T::lit(1e-6) {
            return Ok(y0);
        }
        let worst = self
            .rows
            .iter()
            .map(|r| -slack(r, &y0))
            .fold(T::zero(), T::max);
        let scale = self
            .rows
            .iter()
            .map(|r| r.rhs.abs())
            .fold(T::one(), T::max);
        let s_var = n;
        let mut aux = Reduced {
            n: n + 1,
            n_base: n + 1,
            chains: Vec::new(),
            free: (0..=n).collect(),
            fixed_value: vec![None; n + 1],
            lower: self.lower.iter().copied().chain([-scale]).collect(),
            upper: self.upper.iter().copied().chain([T::infinity()]).collect(),
            rows: self
                .rows
                .iter()
                .map(|r| {
                    let mut c = r.coeffs.clone();
                    c.push((s_var, -T::one()));
                    Row { coeffs: c, rhs: r.rhs }
                })
                .collect(),
            power: Vec::new(),
            linear: vec![T::zero(); n + 1],
            constant: T::zero(),
        };
        aux.linear[s_var] = T::one();
        let mut start = y0;
        start.push(worst + T::one());
        // settle for a margin within a factor two of the best one
        let stop = |y: &[T], gap: T| y[s_var] < T::zero() && gap <= T::lit(0.5) * -y[s_var];
        let (y, _, _) = aux.run(start, opts, Some(&stop))?;
        if y[s_var] < T::zero() {
            let y: Vec<T> = y[..n].to_vec();
            if self.strictly_feasible(&y) {
                return Ok(y);
            }
        }
        Err(Error::Infeasible)
    }

    /// Smallest slack relative to the size of its right-hand side or bound.
    fn margin(&self, y: &[T]) -> T {
        let mut m = T::infinity();
        for r in &self.rows {
            m = m.min(slack(r, y) / (T::one() + r.rhs.abs()));
        }
        for k in 0..self.n {
            if self.lower[k].is_finite() {
                m = m.min((y[k] - self.lower[k]) / (T::one() + self.lower[k].abs()));
            }
            if self.upper[k].is_finite() {
                m = m.min((self.upper[k] - y[k]) / (T::one() + self.upper[k].abs()));
            }
        }
        m
    }

    fn minimize(&self, y0: Vec<T>, opts: &ConvexOptions<T>) -> Result<(Vec<T>, usize, T)> {
        self.run(y0, opts, None)
    }

    fn objective(&self, y: &[T]) -> T {
        let mut f = self.constant;
        for t in &self.power {
            f += power_value(t, y[t.var]);
        }
        for (g, v) in self.linear.iter().zip(y) {
            f += *g * *v;
        }
        f
    }

    /// Barrier loop. Returns the point, Newton step count, and the duality gap
    /// bound in objective units.
    fn run(
        &self,
        mut y: Vec<T>,
        opts: &ConvexOptions<T>,
        early_stop: Option<&dyn Fn(&[T], T) -> bool>,
    ) -> Result<(Vec<T>, usize, T)> {
        let n = self.n;
        let n_barriers = self.rows.len()
            + self.lower.iter().filter(|v| v.is_finite()).count()
            + self.upper.iter().filter(|v| v.is_finite()).count();
        let has_objective = self.power.iter().any(|t| t.exponent > T::zero() && t.coef > T::zero())
            || self.linear.iter().any(|g| *g != T::zero());
        if n == 0 || !has_objective {
            return Ok((y, 0, T::zero()));
        }

        let sparse_rows: Vec<usize> = (0..self.rows.len()).collect();
        let mut pattern = Vec::new();
        for &i in &sparse_rows {
            let c = &self.rows[i].coeffs;
            for a in 0..c.len() {
                for b in a + 1..c.len() {
                    pattern.push((c[a].0, c[b].0));
                }
            }
        }
        let mut chol = SparseCholesky::<T>::analyze(n, &pattern);
        let diag_pos: Vec<usize> = (0..n).map(|k| chol.position(k, k)).collect();
        let row_slots: Vec<Vec<(usize, usize, usize)>> = sparse_rows
            .iter()
            .map(|&i| {
                let c = &self.rows[i].coeffs;
                let mut slots = Vec::new();
                for a in 0..c.len() {
                    for b in a..c.len() {
                        slots.push((chol.position(c[a].0, c[b].0), a, b));
                    }
                }
                slots
            })
            .collect();

        let fscale = self.objective(&y).abs().max(T::min_positive_value().sqrt());
        let ten = T::lit(10.0);
        let mut t = T::one() / fscale;
        let mut steps = 0usize;
        let m = T::from_usize(n_barriers.max(1)).unwrap();
        let center_tol = T::lit(1e-10).max(T::epsilon().sqrt());

        let mut grad = vec![T::zero(); n];
        let mut slacks = vec![T::zero(); self.rows.len()];
        // largest squared Newton decrement accepted as centered
        let mut residual = T::zero();
        loop {
            // centering
            let mut inner = 0;
            let mut last_decrement = T::infinity();
            loop {
                if let Some(stop) = early_stop {
                    if stop(&y, m / t) {
                        return Ok((y, steps, T::zero()));
                    }
                }
                if steps >= opts.max_newton {
                    return Err(Error::NumericalFailure("Newton iteration limit".into()));
                }
                for (i, r) in self.rows.iter().enumerate() {
                    slacks[i] = slack(r, &y);
                }
                chol.clear();
                for k in 0..n {
                    grad[k] = t * self.linear[k];
                    let mut h = T::zero();
                    if self.lower[k].is_finite() {
                        let d = y[k] - self.lower[k];
                        grad[k] -= T::one() / d;
                        h += T::one() / (d * d);
                    }
                    if self.upper[k].is_finite() {
                        let d = self.upper[k] - y[k];
                        grad[k] += T::one() / d;
                        h += T::one() / (d * d);
                    }
                    chol.add(diag_pos[k], h);
                }
                for term in &self.power {
                    if term.exponent == T::zero() {
                        continue;
                    }
                    let k = term.var;
                    let p = term.exponent;
                    let v = y[k];
                    let base = term.coef * v.powf(-p - T::one());
                    grad[k] -= t * p * base;
                    chol.add(diag_pos[k], t * p * (p + T::one()) * base / v);
                }
                for (i, r) in self.rows.iter().enumerate() {
                    let inv = T::one() / slacks[i];
                    for &(v, c) in &r.coeffs {
                        grad[v] += c * inv;
                    }
                }
                for (slots, &i) in row_slots.iter().zip(&sparse_rows) {
                    let c = &self.rows[i].coeffs;
                    let w = T::one() / (slacks[i] * slacks[i]);
                    for &(pos, a, b) in slots {
                        chol.add(pos, w * c[a].1 * c[b].1);
                    }
                }
                let mut reg = T::zero();
                while !chol.factor() {
                    // rebuild with a diagonal shift
                    reg = if reg == T::zero() { T::epsilon().sqrt() } else { reg * ten };
                    if reg > T::one() {
                        return Err(Error::NumericalFailure("Newton matrix not positive".into()));
                    }
                    self.refill(&mut chol, &y, t, &slacks, &diag_pos, &row_slots, &sparse_rows, reg);
                }
                let mut dir: Vec<T> = grad.iter().map(|g| -*g).collect();
                chol.solve(&mut dir);
                let decrement: T = -grad.iter().zip(&dir).map(|(g, d)| *g * *d).sum::<T>();
                steps += 1;
                inner += 1;
                if !(decrement >= T::zero()) || !decrement.is_finite() {
                    return Err(Error::NumericalFailure("invalid Newton decrement".into()));
                }
                if decrement * T::lit(0.5) <= center_tol {
                    residual = residual.max(decrement);
                    break;
                }
                // nearly centered and no longer improving: rounding floor
                if decrement <= T::lit(1e-3) && decrement > T::lit(0.9) * last_decrement {
                    residual = residual.max(decrement);
                    break;
                }
                last_decrement = decrement;
                let step = self.max_step(&y, &dir, &slacks);
                let mut alpha = (T::lit(0.99) * step).min(T::one());
                let row_dir: Vec<T> = self
                    .rows
                    .iter()
                    .map(|r| r.coeffs.iter().map(|&(v, c)| c * dir[v]).sum())
                    .collect();
                let mut trial = vec![T::zero(); n];
                loop {
                    for k in 0..n {
                        trial[k] = y[k] + alpha * dir[k];
                    }
                    let change = self.barrier_change(&y, &dir, &row_dir, &slacks, alpha, t);
                    if change <= -T::lit(0.01) * alpha * decrement {
                        break;
                    }
                    alpha = alpha * T::lit(0.5);
                    if alpha < T::lit(1e-14) {
                        break;
                    }
                }
                if alpha < T::lit(1e-14) {
                    // no progress possible at this t: accept if already centered enough
                    if decrement <= T::lit(1e-6) {
                        residual = residual.max(decrement);
                        break;
                    }
                    return Err(Error::NumericalFailure("line search stalled".into()));
                }
                if trial == y {
                    // step below the resolution of y
                    residual = residual.max(decrement);
                    break;
                }
                std::mem::swap(&mut y, &mut trial);
                if inner > 200 {
                    return Err(Error::NumericalFailure("centering did not converge".into()));
                }
            }
            let gap = (m + T::lit(2.0) * (m * residual).sqrt()) / t;
            residual = T::zero();
            let f = self.objective(&y);
            if gap <= opts.tol * f.abs().max(T::min_positive_value()) || gap <= T::min_positive_value()
            {
                // slack for inexact centering
                return Ok((y, steps, gap * T::lit(1.01)));
            }
            t = t * ten;
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn refill(
        &self,
        chol: &mut SparseCholesky<T>,
        y: &[T],
        t: T,
        slacks: &[T],
        diag_pos: &[usize],
        row_slots: &[Vec<(usize, usize, usize)>],
        sparse_rows: &[usize],
        reg: T,
    ) {
        chol.clear();
        for k in 0..self.n {
            let mut h = T::zero();
            if self.lower[k].is_finite() {
                let d = y[k] - self.lower[k];
                h += T::one() / (d * d);
            }
            if self.upper[k].is_finite() {
                let d = self.upper[k] - y[k];
                h += T::one() / (d * d);
            }
            chol.add(diag_pos[k], h + reg);
        }
        for term in &self.power {
            if term.exponent == T::zero() {
                continue;
            }
            let p = term.exponent;
            let v = y[term.var];
            chol.add(
                diag_pos[term.var],
                t * p * (p + T::one()) * term.coef * v.powf(-p - T::lit(2.0)),
            );
        }
        for (slots, &i) in row_slots.iter().zip(sparse_rows) {
            let c = &self.rows[i].coeffs;
            let w = T::one() / (slacks[i] * slacks[i]);
            for &(pos, a, b) in slots {
                chol.add(pos, w * c[a].1 * c[b].1);
            }
        }
    }

    #[cfg(test)]
    fn barrier(&self, y: &[T], t: T) -> T {
        let mut phi = t * self.objective(y);
        for r in &self.rows {
            let s = slack(r, y);
            if !(s > T::zero()) {
                return T::infinity();
            }
            phi -= s.ln();
        }
        for k in 0..self.n {
            if self.lower[k].is_finite() {
                let d = y[k] - self.lower[k];
                if !(d > T::zero()) {
                    return T::infinity();
                }
                phi -= d.ln();
            }
            if self.upper[k].is_finite() {
                let d = self.upper[k] - y[k];
                if !(d > T::zero()) {
                    return T::infinity();
                }
                phi -= d.ln();
            }
        }
        phi
    }

    /// `barrier(y + alpha dir) - barrier(y)`, summed term by term from
    /// relative changes so that it stays accurate for tiny steps. Infinite
    /// when the step leaves the domain.
    fn barrier_change(&self, y: &[T], dir: &[T], row_dir: &[T], slacks: &[T], alpha: T, t: T) -> T {
        let log_ratio = |rel: T| if rel > -T::one() { rel.ln_1p() } else { T::neg_infinity() };
        let mut change = T::zero();
        for term in &self.power {
            if term.exponent == T::zero() {
                continue;
            }
            let v = y[term.var];
            let l = log_ratio(alpha * dir[term.var] / v);
            change += t * power_value(term, v) * (-term.exponent * l).exp_m1();
        }
        for k in 0..self.n {
            if self.linear[k] != T::zero() {
                change += t * self.linear[k] * alpha * dir[k];
            }
        }
        for (&s, &ds) in slacks.iter().zip(row_dir) {
            change -= log_ratio(-alpha * ds / s);
        }
        for k in 0..self.n {
            if self.lower[k].is_finite() {
                change -= log_ratio(alpha * dir[k] / (y[k] - self.lower[k]));
            }
            if self.upper[k].is_finite() {
                change -= log_ratio(-alpha * dir[k] / (self.upper[k] - y[k]));
            }
        }
        if change.is_nan() {
            T::infinity()
        } else {
            change
        }
    }

    fn max_step(&self, y: &[T], dir: &[T], slacks: &[T]) -> T {
        let mut step = T::infinity();
        for (r, &s) in self.rows.iter().zip(slacks) {
            let ds: T = r.coeffs.iter().map(|&(v, c)| c * dir[v]).sum();
            if ds > T::zero() {
                step = step.min(s / ds);
            }
        }
        for k in 0..self.n {
            if dir[k] < T::zero() && self.lower[k].is_finite() {
                step = step.min((y[k] - self.lower[k]) / -dir[k]);
            }
            if dir[k] > T::zero() && self.upper[k].is_finite() {
                step = step.min((self.upper[k] - y[k]) / dir[k]);
            }
        }
        step
    }
}

#[inline]
fn slack<T: Scalar>(r: &Row<T>, y: &[T]) -> T {
    r.rhs - r.coeffs.iter().map(|&(v, c)| c * y[v]).sum::<T>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn barrier_change_matches_difference() {
        let mut p = ConvexProgram::<f64>::new(3);
        for j in 0..3 {
            p.lower[j] = 0.1;
            p.upper[j] = 5.0;
            p.power.push(PowerTerm { var: j, coef: 1.0 + j as f64, exponent: 2.0 });
        }
        p.linear[1] = 0.5;
        p.add_row(vec![(0, 1.0), (1, 1.0), (2, 1.0)], 6.0);
        p.add_row(vec![(0, 1.0), (2, -1.0)], 1.0);
        let r = Reduced::new(&p, 0.0).unwrap();
        let y = vec![1.0, 2.0, 1.5];
        let dir = vec![0.3, -0.7, 0.2];
        let slacks: Vec<f64> = r.rows.iter().map(|row| slack(row, &y)).collect();
        let row_dir: Vec<f64> = r.rows.iter().map(|row| row.coeffs.iter().map(|&(v, c)| c * dir[v]).sum()).collect();
        for alpha in [1e-3, 0.1, 0.5, 1.0] {
            let trial: Vec<f64> = y.iter().zip(&dir).map(|(a, b)| a + alpha * b).collect();
            let direct = r.barrier(&trial, 3.0) - r.barrier(&y, 3.0);
            let change = r.barrier_change(&y, &dir, &row_dir, &slacks, alpha, 3.0);
            assert!((direct - change).abs() <= 1e-12 * (1.0 + direct.abs()), "{alpha}: {direct} vs {change}");
        }
        assert_eq!(r.barrier_change(&y, &dir, &row_dir, &slacks, 10.0, 3.0), f64::INFINITY);
    }

    /// min 1/x s.t. x <= 2 (x > 0): optimum at x = 2.
    #[test]
    fn one_dimensional() {
        let mut p = ConvexProgram::<f64>::new(1);
        p.lower[0] = 1e-12;
        p.add_row(vec![(0, 1.0)], 2.0);
        p.power.push(PowerTerm { var: 0, coef: 1.0, exponent: 1.0 });
        let s = solve_convex(&p, None, &ConvexOptions::default()).unwrap();
        assert!((s.z[0] - 2.0).abs() < 1e-7, "{:?}", s.z);
        assert!((s.objective - 0.5).abs() < 1e-8);
        assert!(s.lower_bound <= 0.5 + 1e-12);
        assert!(s.objective - s.lower_bound <= 1e-9 * 1.5);
    }

    /// min sum x_j^-2 s.t. sum x_j <= n over a dense row: x = 1.
    #[test]
    fn dense_row_becomes_a_chain() {
        let n = 30;
        let mut p = ConvexProgram::<f64>::new(n);
        for j in 0..n {
            p.lower[j] = 1e-12;
            p.power.push(PowerTerm { var: j, coef: 1.0, exponent: 2.0 });
        }
        p.add_row((0..n).map(|j| (j, 1.0)).collect(), n as f64);
        let s = solve_convex(&p, None, &ConvexOptions::default()).unwrap();
        for v in &s.z {
            assert!((v - 1.0).abs() < 1e-6);
        }
        assert!((s.objective - n as f64).abs() < 1e-7 * n as f64);
    }

    #[test]
    fn phase_one_detects_infeasibility() {
        let mut p = ConvexProgram::<f64>::new(1);
        p.lower[0] = 1.0;
        p.upper[0] = 3.0;
        p.add_row(vec![(0, 1.0)], 0.5);
        p.power.push(PowerTerm { var: 0, coef: 1.0, exponent: 1.0 });
        assert!(matches!(
            solve_convex(&p, None, &ConvexOptions::default()),
            Err(Error::Infeasible)
        ));
    }

    #[test]
    fn fixed_variables_are_substituted() {
        // x0 fixed at 1, x1 free, x0 + x1 <= 3: x1 -> 2
        let mut p = ConvexProgram::<f64>::new(2);
        p.lower = vec![1.0, 1e-9];
        p.upper = vec![1.0, 10.0];
        p.add_row(vec![(0, 1.0), (1, 1.0)], 3.0);
        p.power.push(PowerTerm { var: 0, coef: 1.0, exponent: 2.0 });
        p.power.push(PowerTerm { var: 1, coef: 1.0, exponent: 2.0 });
        let s = solve_convex(&p, None, &ConvexOptions::default()).unwrap();
        assert_eq!(s.z[0], 1.0);
        assert!((s.z[1] - 2.0).abs() < 1e-6);
        assert!((s.objective - 1.25).abs() < 1e-8);
    }

    #[test]
    fn works_in_single_precision() {
        let mut p = ConvexProgram::<f32>::new(1);
        p.lower[0] = 1e-6;
        p.add_row(vec![(0, 1.0)], 2.0);
        p.power.push(PowerTerm { var: 0, coef: 1.0, exponent: 1.0 });
        let s = solve_convex(&p, None, &ConvexOptions::default()).unwrap();
        assert!((s.z[0] - 2.0).abs() < 1e-2);
    }
}
