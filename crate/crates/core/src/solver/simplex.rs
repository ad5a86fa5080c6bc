//! Dense two-phase tableau simplex with Bland's rule.
//!
//! Variables are brought to standard form first: a finite lower bound is
//! shifted to zero, a variable with only an upper bound is mirrored, a free
//! variable is split into a difference of two non-negative columns, and a
//! finite upper bound becomes a `<=` row. Rows are scaled so the right-hand
//! side is non-negative, then receive a slack (`<=`) or a surplus plus
//! artificial column (`>=`, `=`).

use std::time::Instant;

use crate::error::{Error, Result};
use crate::milp::{MilpModel, Sense, VarId};

use super::{SolveResult, SolveStatus};

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-8;
const MAX_ITERATIONS: usize = 200_000;
const BACKEND: &str = "simplex";

#[derive(Debug, Clone, PartialEq)]
pub struct LpRow {
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// Continuous maximization problem.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LpProblem {
    pub lb: Vec<f64>,
    pub ub: Vec<f64>,
    pub rows: Vec<LpRow>,
    pub objective: Vec<(VarId, f64)>,
}

impl LpProblem {
    /// The model with every binary pinned: `binaries[k]` is the value of the
    /// `k`-th binary variable in id order.
    pub fn from_model(model: &MilpModel, binaries: &[f64]) -> Result<Self> {
        let mut lb = Vec::with_capacity(model.num_vars());
        let mut ub = Vec::with_capacity(model.num_vars());
        let mut next = binaries.iter();
        for v in &model.vars {
            if v.binary {
                let val = *next.next().ok_or_else(|| {
                    Error::Model(format!("{} binaries to fix, {} values given", model.num_binaries(), binaries.len()))
                })?;
                lb.push(val);
                ub.push(val);
            } else {
                lb.push(v.lb);
                ub.push(v.ub);
            }
        }
        if next.next().is_some() {
            return Err(Error::Model(format!(
                "{} binaries to fix, {} values given",
                model.num_binaries(),
                binaries.len()
            )));
        }
        let rows = model
            .constraints
            .iter()
            .map(|c| LpRow {
                terms: c.terms.clone(),
                sense: c.sense,
                rhs: c.rhs,
            })
            .collect();
        Ok(LpProblem {
            lb,
            ub,
            rows,
            objective: model.objective.clone(),
        })
    }

    pub fn num_vars(&self) -> usize {
        self.lb.len()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().map(|&(j, c)| c * x[j]).sum()
    }

    /// Largest violation of a bound or row, each row scaled by
    /// `1 + |rhs| + max |a_j x_j|`.
    pub fn scaled_violation(&self, x: &[f64]) -> f64 {
        let bounds = (0..self.num_vars()).map(|j| (self.lb[j] - x[j]).max(x[j] - self.ub[j]).max(0.0) / (1.0 + x[j].abs()));
        let rows = self.rows.iter().map(|r| {
            let lhs: f64 = r.terms.iter().map(|&(j, a)| a * x[j]).sum();
            let scale = 1.0 + r.rhs.abs() + r.terms.iter().map(|&(j, a)| (a * x[j]).abs()).fold(0.0, f64::max);
            let v = match r.sense {
                Sense::Le => (lhs - r.rhs).max(0.0),
                Sense::Ge => (r.rhs - lhs).max(0.0),
                Sense::Eq => (lhs - r.rhs).abs(),
            };
            v / scale
        });
        bounds.chain(rows).fold(0.0, f64::max)
    }
}

/// Simplex outcome with certificate data.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: SolveStatus,
    pub objective: f64,
    pub x: Vec<f64>,
    /// Dual value per row of the problem; for a maximization, `>=` 0 on
    /// `<=` rows and `<=` 0 on `>=` rows.
    pub duals: Vec<f64>,
    /// Reduced costs of the standard-form columns at the final basis;
    /// all `<= 0` at an optimum.
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
    pub message: String,
}

impl LpSolution {
    fn verdict(status: SolveStatus, iterations: usize, message: impl Into<String>) -> Self {
        LpSolution {
            status,
            objective: f64::NAN,
            x: Vec::new(),
            duals: Vec::new(),
            reduced_costs: Vec::new(),
            iterations,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum ColMap {
    Fixed(f64),
    Shift { col: usize, lb: f64 },
    Mirror { col: usize, ub: f64 },
    Split { pos: usize, neg: usize },
}

struct Tableau {
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    d: Vec<f64>,
    z: f64,
    width: usize,
    iterations: usize,
}

enum Step {
    Optimal,
    Unbounded,
    Stalled,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.t[i][self.width]
    }

    fn price(&mut self, cost: &[f64]) {
        self.d = cost.to_vec();
        self.d.push(0.0);
        self.z = 0.0;
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for (dk, tk) in self.d.iter_mut().zip(&self.t[i]) {
                    *dk -= cb * tk;
                }
                self.z += cb * self.t[i][self.width];
            }
        }
        for &b in &self.basis {
            self.d[b] = 0.0;
        }
    }

    fn pivot(&mut self, r: usize, k: usize) {
        let p = self.t[r][k];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        self.t[r][k] = 1.0;
        let row_r = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[k];
            if f != 0.0 {
                for (v, &a) in row.iter_mut().zip(&row_r) {
                    *v -= f * a;
                }
                row[k] = 0.0;
            }
        }
        let f = self.d[k];
        if f != 0.0 {
            for (v, &a) in self.d.iter_mut().zip(&row_r) {
                *v -= f * a;
            }
            self.d[k] = 0.0;
            self.z += f * row_r[self.width];
        }
        self.basis[r] = k;
        self.iterations += 1;
    }

    /// Bland's rule: lowest-index improving column enters; among tied
    /// ratios the row whose basic column has the lowest index leaves.
    fn run(&mut self, allowed: usize) -> Step {
        loop {
            if self.iterations >= MAX_ITERATIONS {
                return Step::Stalled;
            }
            let Some(k) = (0..allowed).find(|&k| self.d[k] > COST_TOL) else {
                return Step::Optimal;
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.t.len() {
                let a = self.t[i][k];
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs(i).max(0.0) / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((r, best)) => {
                        let tie = (ratio - best).abs() <= 1e-12 * (1.0 + best.abs());
                        if (!tie && ratio < best) || (tie && self.basis[i] < self.basis[r]) {
                            Some((i, ratio))
                        } else {
                            Some((r, best))
                        }
                    }
                };
            }
            match leave {
                None => return Step::Unbounded,
                Some((r, _)) => self.pivot(r, k),
            }
        }
    }
}

/// Solve `lp` to optimality or an infeasible/unbounded verdict.
pub fn solve_lp(lp: &LpProblem) -> LpSolution {
    let n = lp.num_vars();
    // standard-form columns
    let mut map = Vec::with_capacity(n);
    let mut ncols = 0;
    let mut upper_rows: Vec<(usize, f64)> = Vec::new();
    for j in 0..n {
        let (lb, ub) = (lp.lb[j], lp.ub[j]);
        if lb.is_nan() || ub.is_nan() || lb > ub || lb == f64::INFINITY || ub == f64::NEG_INFINITY {
            return LpSolution::verdict(SolveStatus::Infeasible, 0, format!("empty bounds on v{j}"));
        }
        let m = if lb == ub {
            ColMap::Fixed(lb)
        } else if lb.is_finite() {
            if ub.is_finite() {
                upper_rows.push((ncols, ub - lb));
            }
            ncols += 1;
            ColMap::Shift { col: ncols - 1, lb }
        } else if ub.is_finite() {
            ncols += 1;
            ColMap::Mirror { col: ncols - 1, ub }
        } else {
            ncols += 2;
            ColMap::Split { pos: ncols - 2, neg: ncols - 1 }
        };
        map.push(m);
    }
    let n_struct = ncols;

    let mut cost = vec![0.0; n_struct];
    for &(j, c) in &lp.objective {
        match map[j] {
            ColMap::Fixed(_) => {}
            ColMap::Shift { col, .. } => cost[col] += c,
            ColMap::Mirror { col, .. } => cost[col] -= c,
            ColMap::Split { pos, neg } => {
                cost[pos] += c;
                cost[neg] -= c;
            }
        }
    }

    // rows over structural columns: (coefficients, sense, rhs, sign applied)
    let mut rows: Vec<(Vec<f64>, Sense, f64)> = Vec::with_capacity(lp.rows.len() + upper_rows.len());
    for r in &lp.rows {
        let mut a = vec![0.0; n_struct];
        let mut rhs = r.rhs;
        for &(j, c) in &r.terms {
            match map[j] {
                ColMap::Fixed(v) => rhs -= c * v,
                ColMap::Shift { col, lb } => {
                    a[col] += c;
                    rhs -= c * lb;
                }
                ColMap::Mirror { col, ub } => {
                    a[col] -= c;
                    rhs -= c * ub;
                }
                ColMap::Split { pos, neg } => {
                    a[pos] += c;
                    a[neg] -= c;
                }
            }
        }
        rows.push((a, r.sense, rhs));
    }
    for &(col, cap) in &upper_rows {
        let mut a = vec![0.0; n_struct];
        a[col] = 1.0;
        rows.push((a, Sense::Le, cap));
    }
    let m = rows.len();
    let mut sign = vec![1.0; m];
    for (i, row) in rows.iter_mut().enumerate() {
        if row.2 < 0.0 {
            sign[i] = -1.0;
            row.0.iter_mut().for_each(|v| *v = -*v);
            row.2 = -row.2;
            row.1 = match row.1 {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            };
        }
    }

    let n_slack = rows.iter().filter(|r| r.1 != Sense::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Sense::Le).count();
    let width = n_struct + n_slack + n_art;
    let art_start = n_struct + n_slack;
    let mut t = vec![vec![0.0; width + 1]; m];
    let mut basis = vec![0; m];
    let mut identity = vec![0; m];
    let (mut s_next, mut a_next) = (n_struct, art_start);
    for (i, (a, sense, rhs)) in rows.iter().enumerate() {
        t[i][..n_struct].copy_from_slice(a);
        t[i][width] = *rhs;
        match sense {
            Sense::Le => {
                t[i][s_next] = 1.0;
                basis[i] = s_next;
                s_next += 1;
            }
            Sense::Ge => {
                t[i][s_next] = -1.0;
                s_next += 1;
                t[i][a_next] = 1.0;
                basis[i] = a_next;
                a_next += 1;
            }
            Sense::Eq => {
                t[i][a_next] = 1.0;
                basis[i] = a_next;
                a_next += 1;
            }
        }
        identity[i] = basis[i];
    }
    let mut tab = Tableau {
        t,
        basis,
        d: Vec::new(),
        z: 0.0,
        width,
        iterations: 0,
    };

    // phase 1: maximize -sum(artificials)
    if n_art > 0 {
        let mut c1 = vec![0.0; width];
        c1[art_start..].iter_mut().for_each(|v| *v = -1.0);
        tab.price(&c1);
        match tab.run(width) {
            Step::Optimal => {}
            Step::Stalled => {
                return LpSolution::verdict(SolveStatus::Error, tab.iterations, "numerical failure: iteration limit in phase 1")
            }
            Step::Unbounded => {
                return LpSolution::verdict(SolveStatus::Error, tab.iterations, "numerical failure: unbounded phase 1")
            }
        }
        let scale = 1.0 + rows.iter().map(|r| r.2).fold(0.0, f64::max);
        if tab.z < -FEAS_TOL * scale {
            return LpSolution::verdict(
                SolveStatus::Infeasible,
                tab.iterations,
                format!("phase 1 ended with infeasibility {}", -tab.z),
            );
        }
        // drive remaining artificials out of the basis; rows where that is
        // impossible are redundant and keep a zero-valued artificial
        for i in 0..m {
            if tab.basis[i] >= art_start {
                if let Some(k) = (0..art_start).find(|&k| tab.t[i][k].abs() > PIVOT_TOL) {
                    tab.t[i][width] = 0.0;
                    tab.pivot(i, k);
                }
            }
        }
    }

    // phase 2
    let mut c2 = vec![0.0; width];
    c2[..n_struct].copy_from_slice(&cost);
    tab.price(&c2);
    match tab.run(art_start) {
        Step::Optimal => {}
        Step::Unbounded => return LpSolution::verdict(SolveStatus::Unbounded, tab.iterations, "objective unbounded"),
        Step::Stalled => {
            return LpSolution::verdict(SolveStatus::Error, tab.iterations, "numerical failure: iteration limit in phase 2")
        }
    }

    let mut y = vec![0.0; width];
    for (i, &b) in tab.basis.iter().enumerate() {
        y[b] = tab.rhs(i).max(0.0);
    }
    let x: Vec<f64> = map
        .iter()
        .map(|m| match *m {
            ColMap::Fixed(v) => v,
            ColMap::Shift { col, lb } => lb + y[col],
            ColMap::Mirror { col, ub } => ub - y[col],
            ColMap::Split { pos, neg } => y[pos] - y[neg],
        })
        .collect();
    let viol = lp.scaled_violation(&x);
    if viol > FEAS_TOL {
        return LpSolution::verdict(
            SolveStatus::Error,
            tab.iterations,
            format!("numerical failure: residual {viol:e} at the final basis"),
        );
    }
    let duals = (0..lp.rows.len()).map(|i| -sign[i] * tab.d[identity[i]]).collect();
    LpSolution {
        status: SolveStatus::Optimal,
        objective: lp.objective_value(&x),
        x,
        duals,
        reduced_costs: tab.d[..n_struct].to_vec(),
        iterations: tab.iterations,
        message: String::new(),
    }
}

/// [`solve_lp`] reported as a [`SolveResult`].
pub fn solve_lp_simplex(lp: &LpProblem) -> SolveResult {
    let start = Instant::now();
    let sol = solve_lp(lp);
    let wall = start.elapsed().as_secs_f64();
    if sol.status == SolveStatus::Optimal {
        SolveResult {
            status: SolveStatus::Optimal,
            objective: Some(sol.objective),
            values: Some(sol.x),
            wall_time: wall,
            backend: BACKEND.into(),
            message: String::new(),
        }
    } else {
        SolveResult::without_solution(sol.status, BACKEND, wall, sol.message)
    }
}
