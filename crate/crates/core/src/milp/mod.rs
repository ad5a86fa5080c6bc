//! Solver-agnostic mixed-integer linear models.
//!
//! [`build_model`] assembles the stochastic dispatch problem for a case and
//! scenario set; [`extract_plan`] decodes and audits a solution.

mod build;
mod index;
mod piecewise;
mod plan;
mod product;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::case::MicrogridCase;
use crate::scenario::ScenarioSet;

pub use build::{build_model, expected_variable_count, BuildOptions};
pub use index::{CurveRef, VarKey, VariableIndex};
pub use piecewise::{compute_big_m, linearize_piecewise_affine, PiecewiseCurve, Segment, SegmentBigM};
pub use plan::{extract_plan, OperationPlan, ScenarioState, BINARY_TOLERANCE, RESIDUAL_TOLERANCE};
pub use product::linearize_binary_product;

pub type VarId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    pub fn as_str(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

/// What a constraint expresses; written into LP files as comments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tag {
    ElectrolyzerDroop,
    FuelCellDroop,
    VoltVar,
    RenewableDroop,
    HydrogenInjection,
    ModeExclusion,
    ProductLinearization,
    TankBalance,
    ConstantPq,
    ActiveBalance,
    ReactiveBalance,
    VoltageDrop,
    Plumbing,
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("tag serializes");
        write!(f, "{}", s.as_str().unwrap_or("?"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub lb: f64,
    pub ub: f64,
    pub binary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
    pub tag: Tag,
}

impl Constraint {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates the row, zero when satisfied.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.activity(x);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// Big-M constant recorded for audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BigMRecord {
    pub block: String,
    pub input: f64,
    pub output: f64,
}

/// What the model was built from, kept so solutions can be decoded and
/// re-checked without outside state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelContext {
    pub case: MicrogridCase,
    pub scenarios: ScenarioSet,
    pub options: BuildOptions,
}

/// A maximization MILP with named, typed variables.
#[derive(Debug, Clone, Default)]
pub struct MilpModel {
    pub vars: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: Vec<(VarId, f64)>,
    pub index: VariableIndex,
    pub big_m: Vec<BigMRecord>,
    pub context: Option<ModelContext>,
}

impl MilpModel {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add a variable under a unique key.
    ///
    /// # Panics
    /// If the key is already taken; keys are generated by the builder so a
    /// repeat is a programming error.
    pub fn add_var(&mut self, key: VarKey, lb: f64, ub: f64, binary: bool) -> VarId {
        let id = self.vars.len();
        self.index.insert(key, id);
        self.vars.push(Variable { lb, ub, binary });
        id
    }

    pub fn add_binary(&mut self, key: VarKey) -> VarId {
        self.add_var(key, 0.0, 1.0, true)
    }

    /// Add a row; repeated variables are merged and zero coefficients dropped.
    pub fn add_constraint(&mut self, terms: &[(VarId, f64)], sense: Sense, rhs: f64, tag: Tag) {
        let mut merged: Vec<(VarId, f64)> = Vec::with_capacity(terms.len());
        for &(j, a) in terms {
            match merged.iter_mut().find(|(k, _)| *k == j) {
                Some(slot) => slot.1 += a,
                None => merged.push((j, a)),
            }
        }
        merged.retain(|&(_, a)| a != 0.0);
        self.constraints.push(Constraint {
            terms: merged,
            sense,
            rhs,
            tag,
        });
    }

    pub fn set_objective(&mut self, var: VarId, coef: f64) {
        match self.objective.iter_mut().find(|(k, _)| *k == var) {
            Some(slot) => slot.1 = coef,
            None => self.objective.push((var, coef)),
        }
    }

    pub fn var(&self, key: &VarKey) -> Option<VarId> {
        self.index.get(key)
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_binaries(&self) -> usize {
        self.vars.iter().filter(|v| v.binary).count()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().map(|&(j, c)| c * x[j]).sum()
    }

    /// Largest bound or row violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let bounds = self
            .vars
            .iter()
            .zip(x)
            .map(|(v, &xj)| (v.lb - xj).max(xj - v.ub).max(0.0));
        let rows = self.constraints.iter().map(|c| c.violation(x));
        bounds.chain(rows).fold(0.0, f64::max)
    }

    /// Every coefficient, bound and right-hand side is finite or an infinite bound.
    pub fn is_well_formed(&self) -> bool {
        self.vars.iter().all(|v| !v.lb.is_nan() && !v.ub.is_nan() && v.lb <= v.ub)
            && self
                .constraints
                .iter()
                .all(|c| c.rhs.is_finite() && c.terms.iter().all(|(_, a)| a.is_finite()))
            && self.objective.iter().all(|(_, c)| c.is_finite())
    }

    /// Number of rows per tag.
    pub fn tag_counts(&self) -> HashMap<Tag, usize> {
        let mut out = HashMap::new();
        for c in &self.constraints {
            *out.entry(c.tag).or_insert(0) += 1;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constraint_terms_merge() {
        let mut m = MilpModel::new();
        let a = m.add_var(VarKey::Named("a".into()), 0.0, 1.0, false);
        let b = m.add_var(VarKey::Named("b".into()), 0.0, 1.0, false);
        m.add_constraint(&[(a, 1.0), (b, 2.0), (a, 0.5), (b, -2.0)], Sense::Le, 1.0, Tag::Plumbing);
        assert_eq!(m.constraints[0].terms, vec![(a, 1.5)]);
        assert_eq!(m.constraints[0].violation(&[1.0, 0.0]), 0.5);
    }

    #[test]
    #[should_panic]
    fn duplicate_keys_panic() {
        let mut m = MilpModel::new();
        m.add_binary(VarKey::Named("z".into()));
        m.add_binary(VarKey::Named("z".into()));
    }

    #[test]
    fn tag_names() {
        assert_eq!(Tag::ActiveBalance.to_string(), "active_balance");
        assert_eq!(Tag::VoltVar.to_string(), "volt_var");
    }
}
