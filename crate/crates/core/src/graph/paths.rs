use std::collections::VecDeque;

use fixedbitset::FixedBitSet;

use super::TaskGraph;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Reachability sets: `reach[j]` holds every task strictly after `j`.
#[derive(Clone, Debug)]
pub struct Closure {
    reach: Vec<FixedBitSet>,
}

impl Closure {
    pub fn precedes(&self, a: usize, b: usize) -> bool {
        self.reach[a].contains(b)
    }

    pub fn comparable(&self, a: usize, b: usize) -> bool {
        self.precedes(a, b) || self.precedes(b, a)
    }

    /// All ordered pairs `(a, b)` with `a` before `b`.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (a, r) in self.reach.iter().enumerate() {
            out.extend(r.ones().map(|b| (a, b)));
        }
        out
    }
}

impl<T: Scalar> TaskGraph<T> {
    /// Kahn's algorithm, lowest index first among ready tasks.
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        let n = self.len();
        let mut indeg: Vec<usize> = (0..n).map(|j| self.pred[j].len()).collect();
        let mut queue: VecDeque<usize> = (0..n).filter(|&j| indeg[j] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(j) = queue.pop_front() {
            order.push(j);
            for &k in &self.succ[j] {
                indeg[k] -= 1;
                if indeg[k] == 0 {
                    queue.push_back(k);
                }
            }
        }
        if order.len() == n {
            Ok(order)
        } else {
            Err(Error::Cycle)
        }
    }

    /// Earliest completion time of every task when each starts as soon as its
    /// predecessors finish.
    pub fn earliest_completions(&self, times: &[T]) -> Result<Vec<T>> {
        let order = self.topological_order()?;
        Ok(self.earliest_completions_in(&order, times))
    }

    pub(crate) fn earliest_completions_in(&self, order: &[usize], times: &[T]) -> Vec<T> {
        let mut fin = vec![T::zero(); self.len()];
        for &j in order {
            let ready = self.pred[j]
                .iter()
                .map(|&i| fin[i])
                .fold(T::zero(), T::max);
            fin[j] = ready + times[j];
        }
        fin
    }

    /// Longest path length, summing `times` along the path.
    pub fn critical_path_time(&self, times: &[T]) -> Result<T> {
        assert_eq!(times.len(), self.len(), "one execution time per task");
        Ok(self
            .earliest_completions(times)?
            .into_iter()
            .fold(T::zero(), T::max))
    }

    pub(crate) fn critical_path_in(&self, order: &[usize], times: &[T]) -> T {
        self.earliest_completions_in(order, times)
            .into_iter()
            .fold(T::zero(), T::max)
    }

    /// Length of the longest path through each task (its "tail" included).
    /// `total - through[j]` is the task's float.
    pub(crate) fn longest_through_in(&self, order: &[usize], times: &[T]) -> Vec<T> {
        let fin = self.earliest_completions_in(order, times);
        let mut tail = vec![T::zero(); self.len()];
        for &j in order.iter().rev() {
            let after = self.succ[j]
                .iter()
                .map(|&k| tail[k])
                .fold(T::zero(), T::max);
            tail[j] = after + times[j];
        }
        (0..self.len()).map(|j| fin[j] + tail[j] - times[j]).collect()
    }

    pub fn transitive_closure(&self) -> Result<Closure> {
        let order = self.topological_order()?;
        let n = self.len();
        let mut reach = vec![FixedBitSet::with_capacity(n); n];
        for &j in order.iter().rev() {
            let mut r = FixedBitSet::with_capacity(n);
            for &k in &self.succ[j] {
                r.insert(k);
                r.union_with(&reach[k]);
            }
            reach[j] = r;
        }
        Ok(Closure { reach })
    }

    /// Edges of the transitive reduction (unique for a DAG).
    pub fn transitive_reduction(&self) -> Result<Vec<(usize, usize)>> {
        let order = self.topological_order()?;
        let n = self.len();
        let mut rank = vec![0; n];
        for (r, &j) in order.iter().enumerate() {
            rank[j] = r;
        }
        let closure = self.transitive_closure()?;
        let mut out = Vec::new();
        for j in 0..n {
            let mut succ = self.succ[j].clone();
            succ.sort_by_key(|&k| rank[k]);
            let mut covered = FixedBitSet::with_capacity(n);
            for k in succ {
                if covered.contains(k) {
                    continue;
                }
                out.push((j, k));
                covered.insert(k);
                covered.union_with(&closure.reach[k]);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use crate::graph::{SpeedModel, Task, TaskGraph};

    fn graph(n: usize, edges: &[(usize, usize)]) -> TaskGraph<f64> {
        TaskGraph::new(
            (0..n).map(|i| Task::new(format!("t{i}"), 1.0)).collect(),
            edges.to_vec(),
            10.0,
            SpeedModel::continuous(3.0, 0.1, 2.0),
            None,
        )
    }

    #[test]
    fn chain_path_sum() {
        let g = graph(3, &[(0, 1), (1, 2)]);
        assert_eq!(g.critical_path_time(&[1.0, 2.0, 3.0]).unwrap(), 6.0);
    }

    #[test]
    fn independent_max() {
        let g = graph(2, &[]);
        assert_eq!(g.critical_path_time(&[5.0, 2.0]).unwrap(), 5.0);
    }

    #[test]
    fn diamond_longest_branch() {
        let g = graph(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]);
        // paths: 1+1+1 and 1+2+1
        assert_eq!(g.critical_path_time(&[1.0, 1.0, 2.0, 1.0]).unwrap(), 4.0);
    }

    #[test]
    fn cycle_is_an_error() {
        let g = graph(2, &[(0, 1), (1, 0)]);
        assert!(g.critical_path_time(&[1.0, 1.0]).is_err());
    }

    #[test]
    fn reduction_drops_shortcut() {
        let g = graph(3, &[(0, 1), (1, 2), (0, 2)]);
        let mut r = g.transitive_reduction().unwrap();
        r.sort();
        assert_eq!(r, vec![(0, 1), (1, 2)]);
        let c = g.transitive_closure().unwrap();
        assert!(c.precedes(0, 2));
        assert!(!c.precedes(2, 0));
    }

    #[test]
    fn float_is_zero_on_critical_tasks() {
        let g = graph(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]);
        let t = [1.0, 1.0, 2.0, 1.0];
        let order = g.topological_order().unwrap();
        let through = g.longest_through_in(&order, &t);
        assert_eq!(through, vec![4.0, 3.0, 4.0, 4.0]);
    }
}
