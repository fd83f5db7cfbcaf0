#![allow(dead_code)]

use edag_core::graph::{SpeedModel, Task, TaskGraph};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Edges of a random series-parallel DAG on `n` vertices, built by repeatedly
/// composing two smaller ones.
pub fn sp_edges(rng: &mut ChaCha8Rng, n: usize) -> Vec<(usize, usize)> {
    // each part: (vertices, edges, sources, sinks)
    let mut parts: Vec<(Vec<usize>, Vec<(usize, usize)>)> = (0..n).map(|j| (vec![j], vec![])).collect();
    while parts.len() > 1 {
        let a = parts.swap_remove(rng.gen_range(0..parts.len()));
        let b = parts.swap_remove(rng.gen_range(0..parts.len()));
        let mut edges = a.1.clone();
        edges.extend(b.1.iter().copied());
        if rng.gen_bool(0.5) {
            let sinks: Vec<usize> = a.0.iter().copied().filter(|&v| !a.1.iter().any(|e| e.0 == v)).collect();
            let sources: Vec<usize> = b.0.iter().copied().filter(|&v| !b.1.iter().any(|e| e.1 == v)).collect();
            for &s in &sinks {
                for &t in &sources {
                    edges.push((s, t));
                }
            }
        }
        let mut verts = a.0;
        verts.extend(b.0);
        parts.push((verts, edges));
    }
    parts.pop().map(|p| p.1).unwrap_or_default()
}

/// Random DAG: each forward pair of a shuffled order is an edge with
/// probability `p`.
pub fn dag_edges(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(p) {
                edges.push((order[i], order[j]));
            }
        }
    }
    edges
}

pub fn weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(0.5..5.0)).collect()
}

/// Ladder of `k` increasing levels in `[0.5, 4]`.
pub fn ladder(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..k).map(|_| rng.gen_range(0.5..4.0)).collect();
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| *a - *b < 1e-3);
    v
}

pub fn tasks(weights: &[f64]) -> Vec<Task<f64>> {
    weights.iter().enumerate().map(|(i, &w)| Task::new(format!("t{i}"), w)).collect()
}

/// Deadline set to `slack` times the fastest critical path.
pub fn build(weights: &[f64], edges: Vec<(usize, usize)>, model: SpeedModel<f64>, slack: f64, cores: Option<usize>) -> TaskGraph<f64> {
    let g = TaskGraph::new(tasks(weights), edges, 1.0, model, cores);
    let cp = g.min_critical_path().unwrap();
    g.with_deadline(cp * slack)
}

/// Deadline set to `slack` times the critical path at unit speed.
pub fn at_unit_speed(g: TaskGraph<f64>, slack: f64) -> TaskGraph<f64> {
    let cp = g.critical_path_time(&g.weights()).unwrap();
    g.with_deadline(cp * slack)
}
