//! JSON instance files. Parsing is strict: unknown fields are errors.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{SpeedModel, Speeds, Task, TaskGraph, Violation};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub alpha: f64,
    pub deadline: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cores: Option<usize>,
    pub speeds: SpeedsSpec,
    pub tasks: Vec<TaskSpec>,
    #[serde(default)]
    pub edges: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub core_order: Option<BTreeMap<String, Vec<String>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SpeedsSpec {
    Continuous { min: f64, max: f64 },
    Discrete { levels: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub id: String,
    pub weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub core: Option<usize>,
}

impl InstanceFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    /// Converts to a validated graph. A `core_order` is applied with
    /// [`TaskGraph::augment_with_mapping_order`].
    pub fn to_graph<T: Scalar>(&self) -> Result<TaskGraph<T>> {
        let mut violations = Vec::new();
        let index: HashMap<&str, usize> = self
            .tasks
            .iter()
            .enumerate()
            .map(|(i, t)| (t.id.as_str(), i))
            .collect();
        let mut edges = Vec::with_capacity(self.edges.len());
        for (a, b) in &self.edges {
            match (index.get(a.as_str()), index.get(b.as_str())) {
                (Some(&i), Some(&j)) => edges.push((i, j)),
                _ => violations.push(Violation::DanglingEdge { from: a.clone(), to: b.clone() }),
            }
        }
        let tasks = self
            .tasks
            .iter()
            .map(|t| Task { id: t.id.clone(), weight: T::lit(t.weight), core: t.core })
            .collect();
        let speeds = match &self.speeds {
            SpeedsSpec::Continuous { min, max } => {
                Speeds::Continuous { min: T::lit(*min), max: T::lit(*max) }
            }
            SpeedsSpec::Discrete { levels } => {
                Speeds::Discrete(levels.iter().map(|&v| T::lit(v)).collect())
            }
        };
        let model = SpeedModel { alpha: T::lit(self.alpha), speeds };
        let graph = TaskGraph::new(tasks, edges, T::lit(self.deadline), model, self.cores);
        violations.extend(graph.validate());

        let mut orders = Vec::new();
        if let Some(co) = &self.core_order {
            for (key, seq) in co {
                let Ok(c) = key.parse::<usize>() else {
                    violations.push(Violation::InvalidCoreOrder {
                        reason: format!("core key {key:?} is not an index"),
                    });
                    continue;
                };
                if orders.len() <= c {
                    orders.resize(c + 1, Vec::new());
                }
                for id in seq {
                    match index.get(id.as_str()) {
                        Some(&j) => orders[c].push(j),
                        None => violations.push(Violation::InvalidCoreOrder {
                            reason: format!("unknown task {id:?} on core {c}"),
                        }),
                    }
                }
            }
            for (c, seq) in orders.iter().enumerate() {
                for &j in seq {
                    if self.tasks[j].core.is_some_and(|k| k != c) {
                        violations.push(Violation::InvalidCoreOrder {
                            reason: format!("task {} is mapped elsewhere", self.tasks[j].id),
                        });
                    }
                }
            }
        }
        if !violations.is_empty() {
            return Err(Error::InvalidInstance(violations));
        }
        if self.core_order.is_some() {
            graph.augment_with_mapping_order(&orders)
        } else {
            Ok(graph)
        }
    }

    pub fn from_graph<T: Scalar>(graph: &TaskGraph<T>) -> Self {
        let id = |j: usize| graph.task(j).id.clone();
        let speeds = match &graph.speed_model().speeds {
            Speeds::Continuous { min, max } => SpeedsSpec::Continuous {
                min: min.to_f64_lossy(),
                max: max.to_f64_lossy(),
            },
            Speeds::Discrete(v) => SpeedsSpec::Discrete {
                levels: v.iter().map(|x| x.to_f64_lossy()).collect(),
            },
        };
        let core_order = graph.core_order().map(|orders| {
            orders
                .iter()
                .enumerate()
                .map(|(c, seq)| (c.to_string(), seq.iter().map(|&j| id(j)).collect()))
                .collect()
        });
        InstanceFile {
            alpha: graph.alpha().to_f64_lossy(),
            deadline: graph.deadline().to_f64_lossy(),
            cores: graph.cores(),
            speeds,
            tasks: graph
                .tasks()
                .iter()
                .map(|t| TaskSpec { id: t.id.clone(), weight: t.weight.to_f64_lossy(), core: t.core })
                .collect(),
            edges: graph.edges().iter().map(|&(a, b)| (id(a), id(b))).collect(),
            core_order,
        }
    }
}
