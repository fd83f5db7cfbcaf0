//! Seeded synthetic instances: random series-parallel graphs, layered DAGs
//! that are never series-parallel, chains and independent tasks.

use clap::ValueEnum;
use edag_core::graph::{SpeedModel, Task, TaskGraph};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    SpRandom,
    LayeredDag,
    Chain,
    Independent,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::SpRandom => "sp-random",
            Family::LayeredDag => "layered-dag",
            Family::Chain => "chain",
            Family::Independent => "independent",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum LadderSpec {
    Continuous { min: f64, max: f64 },
    /// `count` equidistant levels from `min` to `max`.
    Discrete { count: usize, min: f64, max: f64 },
}

impl LadderSpec {
    pub fn model(&self, alpha: f64) -> SpeedModel<f64> {
        match *self {
            LadderSpec::Continuous { min, max } => SpeedModel::continuous(alpha, min, max),
            LadderSpec::Discrete { count, min, max } => {
                let levels = if count <= 1 {
                    vec![max]
                } else {
                    let step = (max - min) / (count - 1) as f64;
                    (0..count).map(|i| if i + 1 == count { max } else { min + step * i as f64 }).collect()
                };
                SpeedModel::discrete(alpha, levels)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub family: Family,
    pub n: usize,
    pub seed: u64,
    pub weight_min: f64,
    pub weight_max: f64,
    /// Deadline as a multiple of the critical path at top speed.
    pub slack: f64,
    pub alpha: f64,
    pub speeds: LadderSpec,
    /// Edge probability between consecutive layers.
    pub density: f64,
    pub cores: Option<usize>,
}

impl GeneratorConfig {
    pub fn new(family: Family, n: usize, seed: u64) -> Self {
        GeneratorConfig {
            family,
            n,
            seed,
            weight_min: 1.0,
            weight_max: 100.0,
            slack: 1.5,
            alpha: 3.0,
            speeds: LadderSpec::Discrete { count: 20, min: 50.0, max: 1000.0 },
            density: 0.3,
            cores: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// About ten tasks, tight deadlines, 20 levels up to 250.
    E3s,
    /// Larger series-parallel workflows with loose deadlines.
    Genome,
}

impl Preset {
    /// Slack and size are drawn from the preset's ranges by `seed`; a given
    /// `n` overrides the drawn size.
    pub fn config(self, n: Option<usize>, seed: u64) -> GeneratorConfig {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        match self {
            Preset::E3s => GeneratorConfig {
                slack: rng.gen_range(1.05..=1.2),
                speeds: LadderSpec::Discrete { count: 20, min: 0.1, max: 250.0 },
                density: 0.4,
                ..GeneratorConfig::new(Family::LayeredDag, n.unwrap_or_else(|| rng.gen_range(8..=12)), seed)
            },
            Preset::Genome => GeneratorConfig {
                slack: rng.gen_range(2.0..=4.0),
                speeds: LadderSpec::Discrete { count: 20, min: 50.0, max: 1000.0 },
                ..GeneratorConfig::new(
                    Family::SpRandom,
                    n.unwrap_or_else(|| *[50, 100, 500, 1000].choose(&mut rng).unwrap()),
                    seed,
                )
            },
        }
    }
}

/// Deterministic in the config.
pub fn generate(cfg: &GeneratorConfig) -> TaskGraph<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.n.max(1);
    let edges = match cfg.family {
        Family::SpRandom => sp_edges(&mut rng, n),
        Family::LayeredDag => layered_edges(&mut rng, n, cfg.density),
        Family::Chain => (1..n).map(|j| (j - 1, j)).collect(),
        Family::Independent => Vec::new(),
    };
    let tasks = (0..n)
        .map(|j| Task::new(format!("t{j}"), rng.gen_range(cfg.weight_min..=cfg.weight_max)))
        .collect();
    let g = TaskGraph::new(tasks, edges, 1.0, cfg.speeds.model(cfg.alpha), cfg.cores);
    let cp = g.min_critical_path().expect("generated graphs are acyclic");
    g.with_deadline(cp * cfg.slack)
}

/// Random binary composition tree over the tasks; a series node joins every
/// sink of its left part to every source of its right part.
fn sp_edges(rng: &mut ChaCha8Rng, n: usize) -> Vec<(usize, usize)> {
    struct Part {
        sources: Vec<usize>,
        sinks: Vec<usize>,
    }
    let mut parts: Vec<Part> = (0..n).map(|j| Part { sources: vec![j], sinks: vec![j] }).collect();
    let mut edges = Vec::new();
    while parts.len() > 1 {
        let a = parts.swap_remove(rng.gen_range(0..parts.len()));
        let b = parts.swap_remove(rng.gen_range(0..parts.len()));
        let merged = if rng.gen_bool(0.5) {
            for &s in &a.sinks {
                for &t in &b.sources {
                    edges.push((s, t));
                }
            }
            Part { sources: a.sources, sinks: b.sinks }
        } else {
            let mut sources = a.sources;
            sources.extend(b.sources);
            let mut sinks = a.sinks;
            sinks.extend(b.sinks);
            Part { sources, sinks }
        };
        parts.push(merged);
    }
    edges.sort_unstable();
    edges
}

/// Roughly `sqrt(n)` layers with random edges between consecutive layers, plus
/// an induced N (`a->c`, `a->d`, `b->d`, no `b->c`) between the first two
/// layers when they hold at least two tasks each.
fn layered_edges(rng: &mut ChaCha8Rng, n: usize, density: f64) -> Vec<(usize, usize)> {
    let n_layers = ((n as f64).sqrt().round() as usize).clamp(1, n);
    // every layer nonempty; the first two get two tasks each when n allows
    let seeded = if n >= 4 && n_layers >= 2 && n >= n_layers + 2 { 2 } else { 1 };
    let mut next = 0;
    let mut layers: Vec<Vec<usize>> = (0..n_layers)
        .map(|l| {
            let take = if l < 2 { seeded } else { 1 };
            next += take;
            (next - take..next).collect()
        })
        .collect();
    for j in next..n {
        let l = rng.gen_range(0..n_layers);
        layers[l].push(j);
    }
    let mut edges = Vec::new();
    for w in layers.windows(2) {
        for &a in &w[0] {
            for &b in &w[1] {
                if rng.gen_bool(density.clamp(0.0, 1.0)) {
                    edges.push((a, b));
                }
            }
        }
    }
    if n_layers >= 2 && layers[0].len() >= 2 && layers[1].len() >= 2 {
        let (a, b) = (layers[0][0], layers[0][1]);
        let (c, d) = (layers[1][0], layers[1][1]);
        edges.retain(|&e| e != (b, c));
        for e in [(a, c), (a, d), (b, d)] {
            if !edges.contains(&e) {
                edges.push(e);
            }
        }
    }
    edges.sort_unstable();
    edges
}
