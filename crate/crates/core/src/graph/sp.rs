//! Series-parallel recognition by iterated reductions on the transitive
//! reduction: a task with a unique successor that has it as unique
//! predecessor is merged in series; tasks with identical predecessor and
//! successor sets are merged in parallel. When neither applies and more than
//! one node is left, the precedence order contains an induced "N".

use std::collections::{BTreeSet, HashMap};

use super::TaskGraph;
use crate::error::Result;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpNode {
    Leaf(usize),
    /// Every task of the first child precedes every task of the second.
    Series(usize, usize),
    Parallel(usize, usize),
}

/// Binary decomposition tree. Children always sit at lower indices than their
/// parent, so a forward scan is a bottom-up traversal.
#[derive(Clone, Debug)]
pub struct SpDecomposition<T> {
    nodes: Vec<SpNode>,
    weight: Vec<T>,
    root: usize,
}

impl<T: Scalar> SpDecomposition<T> {
    pub fn root(&self) -> usize {
        self.root
    }

    pub fn nodes(&self) -> &[SpNode] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> SpNode {
        self.nodes[i]
    }

    /// Equivalent weight `W` of the subgraph rooted at node `i`.
    pub fn equivalent_weight(&self, i: usize) -> T {
        self.weight[i]
    }

    pub fn total_weight(&self) -> T {
        self.weight[self.root]
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, SpNode::Leaf(_))).count()
    }

    /// Task ids below node `i`.
    pub fn leaves_under(&self, i: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![i];
        while let Some(k) = stack.pop() {
            match self.nodes[k] {
                SpNode::Leaf(t) => out.push(t),
                SpNode::Series(a, b) | SpNode::Parallel(a, b) => {
                    stack.push(b);
                    stack.push(a);
                }
            }
        }
        out
    }

    /// Precedence relation induced by the tree, as ordered task pairs.
    pub fn precedence_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for node in &self.nodes {
            if let SpNode::Series(a, b) = *node {
                let right = self.leaves_under(b);
                for i in self.leaves_under(a) {
                    out.extend(right.iter().map(|&j| (i, j)));
                }
            }
        }
        out
    }

    /// Recomputes every node's equivalent weight for new task weights.
    pub fn reweighted(&self, weights: &[T], alpha: T) -> Self {
        SpDecomposition {
            nodes: self.nodes.clone(),
            weight: equivalent_weights(&self.nodes, weights, alpha),
            root: self.root,
        }
    }
}

/// `W(a;b) = W(a) + W(b)`, `W(a||b)^alpha = W(a)^alpha + W(b)^alpha`.
fn equivalent_weights<T: Scalar>(nodes: &[SpNode], weights: &[T], alpha: T) -> Vec<T> {
    let mut w = vec![T::zero(); nodes.len()];
    for (i, node) in nodes.iter().enumerate() {
        w[i] = match *node {
            SpNode::Leaf(t) => weights[t],
            SpNode::Series(a, b) => w[a] + w[b],
            SpNode::Parallel(a, b) => parallel_weight(w[a], w[b], alpha),
        };
    }
    w
}

pub(crate) fn parallel_weight<T: Scalar>(a: T, b: T, alpha: T) -> T {
    if a == T::zero() {
        return b;
    }
    if b == T::zero() {
        return a;
    }
    // factor out the larger term to keep powers in range
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi * (T::one() + (lo / hi).powf(alpha)).powf(T::one() / alpha)
}

/// Decomposes a DAG into a series-parallel tree; `Ok(None)` when the graph is
/// not series-parallel. Fails only on a cycle.
pub fn sp_decompose<T: Scalar>(graph: &TaskGraph<T>) -> Result<Option<SpDecomposition<T>>> {
    let n = graph.len();
    let reduced = graph.transitive_reduction()?;
    if n == 0 {
        return Ok(None);
    }

    let mut nodes: Vec<SpNode> = (0..n).map(SpNode::Leaf).collect();
    let mut tree = (0..n).collect::<Vec<usize>>();
    let mut alive = vec![true; n];
    let mut alive_count = n;
    let mut pred = vec![BTreeSet::new(); n];
    let mut succ = vec![BTreeSet::new(); n];
    for &(a, b) in &reduced {
        succ[a].insert(b);
        pred[b].insert(a);
    }

    while alive_count > 1 {
        let mut changed = false;

        for u in 0..n {
            while alive[u] && succ[u].len() == 1 {
                let v = *succ[u].iter().next().unwrap();
                if pred[v].len() != 1 {
                    break;
                }
                nodes.push(SpNode::Series(tree[u], tree[v]));
                tree[u] = nodes.len() - 1;
                let after = std::mem::take(&mut succ[v]);
                for &q in &after {
                    pred[q].remove(&v);
                    pred[q].insert(u);
                }
                succ[u] = after;
                pred[v].clear();
                alive[v] = false;
                alive_count -= 1;
                changed = true;
            }
        }

        let mut classes: HashMap<(Vec<usize>, Vec<usize>), usize> = HashMap::new();
        let mut merges = Vec::new();
        for u in (0..n).filter(|&u| alive[u]) {
            let key = (
                pred[u].iter().copied().collect::<Vec<_>>(),
                succ[u].iter().copied().collect::<Vec<_>>(),
            );
            match classes.get(&key) {
                Some(&w) => merges.push((w, u)),
                None => {
                    classes.insert(key, u);
                }
            }
        }
        for (w, u) in merges {
            nodes.push(SpNode::Parallel(tree[w], tree[u]));
            tree[w] = nodes.len() - 1;
            for p in std::mem::take(&mut pred[u]) {
                succ[p].remove(&u);
            }
            for q in std::mem::take(&mut succ[u]) {
                pred[q].remove(&u);
            }
            alive[u] = false;
            alive_count -= 1;
            changed = true;
        }

        if !changed {
            return Ok(None);
        }
    }

    let last = (0..n).find(|&u| alive[u]).unwrap();
    let root = tree[last];
    let weights = graph.weights();
    let weight = equivalent_weights(&nodes, &weights, graph.alpha());
    Ok(Some(SpDecomposition { nodes, weight, root }))
}
