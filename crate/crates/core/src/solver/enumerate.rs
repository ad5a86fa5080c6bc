use std::time::Instant;

use crate::error::{Error, Result};
use crate::milp::{MilpModel, Sense};

use super::simplex::{solve_lp, LpProblem};
use super::{SolveResult, SolveStatus};

/// Largest number of binaries [`solve_enumeration`] accepts by default.
pub const DEFAULT_BINARY_BUDGET: usize = 20;

const BACKEND: &str = "enumeration";
const PRUNE_TOL: f64 = 1e-9;

/// Exact MILP optimum by enumerating every binary assignment and solving
/// the remaining LP with the simplex.
///
/// Assignments are visited in lexicographic order over binaries sorted by
/// id (0 before 1), and only a strictly better objective replaces the
/// incumbent, so ties go to the lexicographically smallest assignment.
/// Partial assignments whose rows cannot be met by any completion within
/// the variable bounds are skipped; this only removes infeasible leaves.
pub fn solve_enumeration(model: &MilpModel, budget: usize) -> Result<SolveResult> {
    let binaries: Vec<usize> = (0..model.num_vars()).filter(|&j| model.vars[j].binary).collect();
    if binaries.len() > budget {
        return Err(Error::BudgetExceeded {
            binaries: binaries.len(),
            budget,
        });
    }
    let start = Instant::now();
    let mut search = Search {
        model,
        binaries: &binaries,
        lb: model.vars.iter().map(|v| v.lb).collect(),
        ub: model.vars.iter().map(|v| v.ub).collect(),
        assignment: Vec::with_capacity(binaries.len()),
        best: None,
        unbounded: false,
        failure: None,
    };
    search.visit()?;
    let wall = start.elapsed().as_secs_f64();

    if let Some(msg) = search.failure {
        return Ok(SolveResult::error(BACKEND, wall, msg));
    }
    if search.unbounded {
        return Ok(SolveResult::without_solution(SolveStatus::Unbounded, BACKEND, wall, ""));
    }
    Ok(match search.best {
        Some((obj, x)) => SolveResult {
            status: SolveStatus::Optimal,
            objective: Some(obj),
            values: Some(x),
            wall_time: wall,
            backend: BACKEND.into(),
            message: String::new(),
        },
        None => SolveResult::without_solution(SolveStatus::Infeasible, BACKEND, wall, "no feasible assignment"),
    })
}

struct Search<'a> {
    model: &'a MilpModel,
    binaries: &'a [usize],
    lb: Vec<f64>,
    ub: Vec<f64>,
    assignment: Vec<f64>,
    best: Option<(f64, Vec<f64>)>,
    unbounded: bool,
    failure: Option<String>,
}

impl Search<'_> {
    fn visit(&mut self) -> Result<()> {
        if self.failure.is_some() || self.unbounded || !self.rows_attainable() {
            return Ok(());
        }
        let depth = self.assignment.len();
        if depth == self.binaries.len() {
            return self.leaf();
        }
        let j = self.binaries[depth];
        let (lo, hi) = (self.model.vars[j].lb, self.model.vars[j].ub);
        for v in [0.0, 1.0] {
            if v < lo || v > hi {
                continue;
            }
            self.assignment.push(v);
            self.lb[j] = v;
            self.ub[j] = v;
            self.visit()?;
            self.assignment.pop();
            self.lb[j] = lo;
            self.ub[j] = hi;
        }
        Ok(())
    }

    /// Every row can still be satisfied for some values within the bounds.
    fn rows_attainable(&self) -> bool {
        self.model.constraints.iter().all(|c| {
            let (mut lo, mut hi) = (0.0, 0.0);
            for &(j, a) in &c.terms {
                let (l, u) = if a >= 0.0 { (self.lb[j], self.ub[j]) } else { (self.ub[j], self.lb[j]) };
                lo += a * l;
                hi += a * u;
            }
            let tol = PRUNE_TOL * (1.0 + c.rhs.abs());
            match c.sense {
                Sense::Le => lo <= c.rhs + tol,
                Sense::Ge => hi >= c.rhs - tol,
                Sense::Eq => lo <= c.rhs + tol && hi >= c.rhs - tol,
            }
        })
    }

    fn leaf(&mut self) -> Result<()> {
        let lp = LpProblem::from_model(self.model, &self.assignment)?;
        let sol = solve_lp(&lp);
        match sol.status {
            SolveStatus::Optimal => {
                let better = match &self.best {
                    None => true,
                    Some((best, _)) => sol.objective > best + 1e-9 * (1.0 + best.abs()),
                };
                if better {
                    self.best = Some((sol.objective, sol.x));
                }
            }
            SolveStatus::Unbounded => self.unbounded = true,
            SolveStatus::Infeasible => {}
            _ => {
                self.failure = Some(format!(
                    "LP failed for assignment {:?}: {}",
                    self.assignment, sol.message
                ))
            }
        }
        Ok(())
    }
}
