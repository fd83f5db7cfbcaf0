//! Energy-aware speed assignment and scheduling of task DAGs.
//!
//! Algorithms are generic over the scalar type; the aliases below fix it to `f64`.

pub mod continuous;
pub mod discrete;
pub mod error;
pub mod graph;
pub mod optim;
pub mod scalar;
pub mod sched_continuous;
pub mod sched_discrete;
pub mod schedule;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Graph = graph::TaskGraph<f64>;
pub type Model = graph::SpeedModel<f64>;
pub type Assignment = continuous::SpeedAssignment<f64>;
pub type Levels = discrete::LevelAssignment<f64>;
pub type Plan = schedule::Schedule<f64>;
