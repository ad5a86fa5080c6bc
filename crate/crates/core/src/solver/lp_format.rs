//! LP text files (write side) and solver solution files (read side).
//!
//! Written files use the CPLEX LP subset understood by common solvers:
//!
//! ```text
//! \ <comment>
//! Maximize
//!  obj: + 2 v0 + 1.5 v1
//! Subject To
//! \ <tag of the following rows>
//!  c0: + 1 v0 + 1 v1 <= 1
//! Bounds
//!  0 <= v0 <= 1
//!  v1 free
//! Binary
//!  v0
//! End
//! ```
//!
//! Variable `k` is named `v<k>` and row `i` is named `c<i>`, so names cannot
//! collide. Every variable gets an explicit bounds line. A binary variable
//! whose bounds are pinned to one value is written as a fixed continuous
//! variable, since some readers reset binary bounds to `[0, 1]`.
//!
//! Solution files hold `status <word>`, then `objective <value>`, then one
//! `v<k> <value>` line per variable. The objective and value lines may be
//! omitted when the status carries no solution.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::milp::{MilpModel, Tag};

use super::SolveStatus;

const TERMS_PER_LINE: usize = 10;

fn num(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

fn write_terms<W: Write>(w: &mut W, terms: &[(usize, f64)]) -> io::Result<()> {
    if terms.is_empty() {
        return write!(w, " 0 v0");
    }
    for (k, &(j, a)) in terms.iter().enumerate() {
        if k > 0 && k % TERMS_PER_LINE == 0 {
            write!(w, "\n   ")?;
        }
        let sign = if a < 0.0 { '-' } else { '+' };
        write!(w, " {sign} {} v{j}", num(a.abs()))?;
    }
    Ok(())
}

fn is_pinned_binary(model: &MilpModel, j: usize) -> bool {
    let v = &model.vars[j];
    v.binary && v.lb == v.ub
}

/// Write `model` in LP format. The output depends only on the model.
pub fn write_lp<W: Write>(model: &MilpModel, w: &mut W) -> io::Result<()> {
    writeln!(
        w,
        "\\ {} variables, {} constraints",
        model.num_vars(),
        model.constraints.len()
    )?;
    writeln!(w, "Maximize")?;
    write!(w, " obj:")?;
    if model.num_vars() > 0 {
        write_terms(w, &model.objective)?;
    }
    writeln!(w)?;

    writeln!(w, "Subject To")?;
    let mut last: Option<Tag> = None;
    for (i, c) in model.constraints.iter().enumerate() {
        if last != Some(c.tag) {
            writeln!(w, "\\ {}", c.tag)?;
            last = Some(c.tag);
        }
        write!(w, " c{i}:")?;
        write_terms(w, &c.terms)?;
        writeln!(w, " {} {}", c.sense.as_str(), num(c.rhs))?;
    }

    writeln!(w, "Bounds")?;
    for (j, v) in model.vars.iter().enumerate() {
        let (lb, ub) = (v.lb, v.ub);
        if lb == ub {
            writeln!(w, " v{j} = {}", num(lb))?;
        } else if lb == f64::NEG_INFINITY && ub == f64::INFINITY {
            writeln!(w, " v{j} free")?;
        } else if ub == f64::INFINITY {
            writeln!(w, " v{j} >= {}", num(lb))?;
        } else {
            writeln!(w, " {} <= v{j} <= {}", num(lb), num(ub))?;
        }
    }

    let binaries: Vec<usize> = (0..model.num_vars())
        .filter(|&j| model.vars[j].binary && !is_pinned_binary(model, j))
        .collect();
    if !binaries.is_empty() {
        writeln!(w, "Binary")?;
        for chunk in binaries.chunks(TERMS_PER_LINE) {
            let names: Vec<String> = chunk.iter().map(|j| format!("v{j}")).collect();
            writeln!(w, " {}", names.join(" "))?;
        }
    }
    writeln!(w, "End")
}

pub fn write_lp_file(model: &MilpModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_lp(model, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Parsed solution file.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionFile {
    pub status: SolveStatus,
    pub objective: Option<f64>,
    pub values: Option<Vec<f64>>,
}

/// Parse solution text for a model with `num_vars` variables.
pub fn parse_solution(text: &str, num_vars: usize) -> std::result::Result<SolutionFile, String> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let (n, first) = lines.next().ok_or("empty solution file")?;
    let status = match first.split_whitespace().collect::<Vec<_>>()[..] {
        ["status", word] => word.parse::<SolveStatus>().map_err(|e| format!("line {n}: {e}"))?,
        _ => return Err(format!("line {n}: expected `status <word>`, got {first:?}")),
    };

    let mut objective = None;
    let mut values = vec![None; num_vars];
    let mut seen = 0;
    for (n, line) in lines {
        let mut parts = line.split_whitespace();
        let (key, val) = match (parts.next(), parts.next(), parts.next()) {
            (Some(k), Some(v), None) => (k, v),
            _ => return Err(format!("line {n}: expected `<key> <value>`, got {line:?}")),
        };
        let value: f64 = val
            .parse()
            .map_err(|_| format!("line {n}: bad number {val:?}"))?;
        if key == "objective" {
            if objective.is_some() || seen > 0 {
                return Err(format!("line {n}: misplaced objective line"));
            }
            objective = Some(value);
            continue;
        }
        let id: usize = key
            .strip_prefix('v')
            .and_then(|d| d.parse().ok())
            .ok_or_else(|| format!("line {n}: unknown variable {key:?}"))?;
        let slot = values
            .get_mut(id)
            .ok_or_else(|| format!("line {n}: variable {key} out of range"))?;
        if slot.replace(value).is_some() {
            return Err(format!("line {n}: duplicate value for {key}"));
        }
        seen += 1;
    }

    if !status.has_solution() {
        return Ok(SolutionFile {
            status,
            objective: None,
            values: None,
        });
    }
    let objective = objective
        .filter(|v| v.is_finite())
        .ok_or("missing or non-finite objective")?;
    let values: Vec<f64> = values
        .into_iter()
        .enumerate()
        .map(|(j, v)| v.ok_or_else(|| format!("missing value for v{j}")))
        .collect::<std::result::Result<_, _>>()?;
    if let Some(j) = values.iter().position(|v| !v.is_finite()) {
        return Err(format!("non-finite value for v{j}"));
    }
    Ok(SolutionFile {
        status,
        objective: Some(objective),
        values: Some(values),
    })
}

pub fn read_solution_file(path: impl AsRef<Path>, num_vars: usize) -> Result<SolutionFile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_solution(&text, num_vars).map_err(|message| Error::Solver(format!("{}: {message}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{Sense, VarKey};

    fn render(m: &MilpModel) -> String {
        let mut out = Vec::new();
        write_lp(m, &mut out).unwrap();
        String::from_utf8(out).unwrap()
    }

    #[test]
    fn bounds_only_model() {
        let mut m = MilpModel::new();
        let x = m.add_var(VarKey::Named("x".into()), -1.0, 2.5, false);
        m.set_objective(x, 1.0);
        let text = render(&m);
        assert!(text.contains("Subject To\nBounds\n -1 <= v0 <= 2.5\nEnd"));
    }

    #[test]
    fn long_rows_wrap_and_signs() {
        let mut m = MilpModel::new();
        let ids: Vec<_> = (0..12)
            .map(|k| m.add_var(VarKey::Named(k.to_string()), 0.0, 1.0, false))
            .collect();
        let terms: Vec<_> = ids.iter().map(|&j| (j, if j % 2 == 0 { 1.0 } else { -0.5 })).collect();
        m.add_constraint(&terms, Sense::Ge, -3.0, Tag::Plumbing);
        let text = render(&m);
        assert!(text.contains(" c0: + 1 v0 - 0.5 v1"));
        assert!(text.contains("\n    + 1 v10 - 0.5 v11 >= -3\n"));
    }

    #[test]
    fn pinned_binary_written_as_fixed() {
        let mut m = MilpModel::new();
        let a = m.add_binary(VarKey::Named("a".into()));
        let b = m.add_var(VarKey::Named("b".into()), 0.0, 0.0, true);
        m.add_constraint(&[(a, 1.0), (b, 1.0)], Sense::Le, 1.0, Tag::ModeExclusion);
        let text = render(&m);
        assert!(text.contains(" v1 = 0\n"));
        assert!(text.contains("Binary\n v0\nEnd"));
        assert!(text.contains("\\ mode_exclusion\n c0:"));
    }

    #[test]
    fn infinite_bounds() {
        let mut m = MilpModel::new();
        m.add_var(VarKey::Named("a".into()), f64::NEG_INFINITY, f64::INFINITY, false);
        m.add_var(VarKey::Named("b".into()), f64::NEG_INFINITY, 4.0, false);
        m.add_var(VarKey::Named("c".into()), 1.0, f64::INFINITY, false);
        let text = render(&m);
        assert!(text.contains(" v0 free\n -inf <= v1 <= 4\n v2 >= 1\n"));
    }

    #[test]
    fn solution_round_trip() {
        let sol = parse_solution("status optimal\nobjective 1.5\nv1 0.5\nv0 1\n", 2).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_eq!(sol.objective, Some(1.5));
        assert_eq!(sol.values, Some(vec![1.0, 0.5]));
    }

    #[test]
    fn infeasible_needs_no_values() {
        let sol = parse_solution("status infeasible\n", 3).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
        assert!(sol.values.is_none());
    }

    #[test]
    fn malformed_solutions_rejected() {
        assert!(parse_solution("", 1).is_err());
        assert!(parse_solution("status happy\n", 1).is_err());
        assert!(parse_solution("status optimal\nobjective 1\n", 1).is_err());
        assert!(parse_solution("status optimal\nobjective 1\nv0 x\n", 1).is_err());
        assert!(parse_solution("status optimal\nobjective 1\nv3 1\n", 1).is_err());
        assert!(parse_solution("status optimal\nobjective 1\nv0 1\nv0 2\n", 1).is_err());
        assert!(parse_solution("status optimal\nobjective nan\nv0 1\n", 1).is_err());
    }
}
