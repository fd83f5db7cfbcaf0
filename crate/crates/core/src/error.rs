use thiserror::Error;

use crate::graph::Violation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("task graph contains a cycle")]
    Cycle,

    #[error("invalid instance: {}", summarize(.0))]
    InvalidInstance(Vec<Violation>),

    #[error("core order induces a precedence cycle")]
    InfeasibleOrder,

    #[error("core order is malformed: {0}")]
    MalformedOrder(String),

    #[error("no schedule meets the deadline")]
    Infeasible,

    #[error("graph is not series-parallel")]
    NotSeriesParallel,

    #[error("convex solver stalled: {0}")]
    NumericalFailure(String),

    #[error("time budget exhausted before any feasible solution was found (lower bound {lower_bound})")]
    TimeLimitNoIncumbent { lower_bound: f64 },

    #[error("instance too large for exhaustive search: {reason}")]
    InstanceTooLarge { reason: String },

    #[error("algorithm requires a {expected} speed model")]
    WrongSpeedModel { expected: &'static str },

    #[error("algorithm requires a finite core count")]
    MissingCores,

    #[error("algorithm requires a {expected} instance")]
    WrongProblemClass { expected: &'static str },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn summarize(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
