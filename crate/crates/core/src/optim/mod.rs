//! Numerical engines: an interior-point solver for the separable deadline
//! programs, branch and bound over speed levels, and LP model export.

mod bnb;
mod convex;
mod deadline;
mod lp;
mod sparse;

pub use bnb::{solve_bnb, BnbNode, BnbOptions, BnbOutcome, BnbStats, LevelProblem, NodeRelaxation, TraceEntry};
pub use convex::{solve_convex, ConvexOptions, ConvexProgram, ConvexSolution, PowerTerm, Row};
pub use deadline::{DeadlineProgram, DeadlineSolution};
pub use lp::{LpModel, LpRow, LpSense};

/// Outcome class of a solver call.
///
/// Approximation algorithms report `Optimal` once they complete; their
/// guarantee is relative, not absolute.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SolveStatus<T> {
    Optimal,
    Infeasible,
    /// Budget exhausted; `incumbent >= lower_bound` when both exist.
    TimeLimit { incumbent: Option<T>, lower_bound: T },
    NumericalFailure,
}

impl<T> SolveStatus<T> {
    pub fn name(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "Optimal",
            SolveStatus::Infeasible => "Infeasible",
            SolveStatus::TimeLimit { .. } => "TimeLimit",
            SolveStatus::NumericalFailure => "NumericalFailure",
        }
    }
}
