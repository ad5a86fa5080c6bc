//! Solving [`MilpModel`](crate::milp::MilpModel)s.
//!
//! Full-size models go to an external MILP solver through LP files
//! ([`invoke_external_solver`]). Tiny models can be solved exactly in
//! process by enumerating binary assignments over a dense simplex
//! ([`solve_enumeration`]), which serves as the reference in tests.

mod enumerate;
mod external;
mod lp_format;
mod simplex;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use enumerate::{solve_enumeration, DEFAULT_BINARY_BUDGET};
pub use external::{invoke_external_solver, ExternalSolverConfig, SOLVER_CMD_ENV};
pub use lp_format::{parse_solution, read_solution_file, write_lp, write_lp_file, SolutionFile};
pub use simplex::{solve_lp, solve_lp_simplex, LpProblem, LpRow, LpSolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveStatus {
    Optimal,
    Feasible,
    Infeasible,
    Unbounded,
    Error,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Feasible => "feasible",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::Error => "error",
        }
    }

    /// Whether a result with this status carries a solution.
    pub fn has_solution(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::Feasible)
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolveStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "optimal" => SolveStatus::Optimal,
            "feasible" => SolveStatus::Feasible,
            "infeasible" => SolveStatus::Infeasible,
            "unbounded" => SolveStatus::Unbounded,
            "error" => SolveStatus::Error,
            other => return Err(format!("unknown status {other:?}")),
        })
    }
}

/// Outcome of one solve. `objective` and `values` are present exactly when
/// the status has a solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub objective: Option<f64>,
    pub values: Option<Vec<f64>>,
    /// Seconds.
    pub wall_time: f64,
    pub backend: String,
    /// Diagnostics, e.g. captured solver stderr on failure.
    pub message: String,
}

impl SolveResult {
    pub(crate) fn without_solution(status: SolveStatus, backend: &str, wall_time: f64, message: impl Into<String>) -> Self {
        SolveResult {
            status,
            objective: None,
            values: None,
            wall_time,
            backend: backend.into(),
            message: message.into(),
        }
    }

    pub(crate) fn error(backend: &str, wall_time: f64, message: impl Into<String>) -> Self {
        Self::without_solution(SolveStatus::Error, backend, wall_time, message)
    }
}

/// A way of solving models, shareable across threads.
#[derive(Debug, Clone, PartialEq)]
pub enum Backend {
    External(ExternalSolverConfig),
    /// In-process exact enumeration; models above the budget are rejected.
    Enumeration { budget: usize },
}

impl Backend {
    pub fn solve(&self, model: &crate::milp::MilpModel) -> crate::error::Result<SolveResult> {
        match self {
            Backend::External(cfg) => Ok(invoke_external_solver(model, cfg)),
            Backend::Enumeration { budget } => solve_enumeration(model, *budget),
        }
    }
}
