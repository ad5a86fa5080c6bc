use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::response::{tank_step, HydrogenMode};
use crate::scenario::{Profile, ScenarioSet};
use crate::solver::{SolveResult, SolveStatus};

use super::{BuildOptions, MilpModel, ModelContext, VarKey};

/// Largest distance of a binary value from the nearest integer that is
/// accepted as integral.
pub const BINARY_TOLERANCE: f64 = 1e-5;

/// Largest row or bound violation accepted in a decoded solution, p.u.
pub const RESIDUAL_TOLERANCE: f64 = 1e-6;

/// Realized operating state of one scenario. Device series are indexed
/// `[device][t]`, network series `[bus or branch][t]`, all in case order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioState {
    pub label: String,
    pub weight: f64,
    pub frequency: Vec<f64>,
    pub voltage: Vec<Vec<f64>>,
    pub flow_p: Vec<Vec<f64>>,
    pub flow_q: Vec<Vec<f64>>,
    /// Power drawn by each electrolyzer (zero unless in electrolyzer mode).
    pub electrolyzer_power: Vec<Vec<f64>>,
    /// Power delivered by each fuel cell (zero unless in fuel-cell mode).
    pub fuel_cell_power: Vec<Vec<f64>>,
    pub hydrogen_p: Vec<Vec<f64>>,
    pub hydrogen_q: Vec<Vec<f64>>,
    /// Tank level at the end of each period.
    pub tank: Vec<Vec<f64>>,
    pub renewable_p: Vec<Vec<f64>>,
    pub renewable_q: Vec<Vec<f64>>,
    pub renewable_mpp: Vec<Vec<f64>>,
    pub load_p: Vec<Vec<f64>>,
}

/// Decoded solution: shared schedules plus one state per scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperationPlan {
    pub options: BuildOptions,
    /// Objective recomputed from the pickup schedule and scenario data.
    pub objective: f64,
    /// Objective reported by the solver.
    pub solver_objective: f64,
    pub load_pickup: Vec<Vec<bool>>,
    pub electrolyzer_on: Vec<Vec<bool>>,
    pub fuel_cell_on: Vec<Vec<bool>>,
    /// Setpoints of constant-PQ renewables; `None` for droop-mode ones.
    pub power_setpoint: Vec<Option<Vec<f64>>>,
    pub scenarios: Vec<ScenarioState>,
    /// Largest row or bound violation at the decoded point.
    pub max_residual: f64,
}

impl OperationPlan {
    pub fn hydrogen_mode(&self, h: usize, t: usize) -> HydrogenMode {
        HydrogenMode::from_flags(self.electrolyzer_on[h][t], self.fuel_cell_on[h][t])
    }

    /// The scenario data the plan was computed for.
    pub fn scenario_set(&self) -> Result<ScenarioSet> {
        ScenarioSet::new(
            self.scenarios.iter().map(|s| s.label.clone()).collect(),
            self.scenarios.iter().map(|s| s.weight).collect(),
            self.scenarios
                .iter()
                .map(|s| Profile {
                    renewable_mpp: s.renewable_mpp.clone(),
                    load_p: s.load_p.clone(),
                })
                .collect(),
        )
    }
}

/// Decode `sol` by the model's variable index and audit it.
///
/// Binaries must be within [`BINARY_TOLERANCE`] of an integer and are
/// rounded; every row and bound must then hold within
/// [`RESIDUAL_TOLERANCE`]; the objective recomputed from the scenario data
/// must match the solver's within `1e-6` relative. Tank levels are replayed
/// from the decoded device powers and must agree with the solver's levels
/// within the residual tolerance.
pub fn extract_plan(model: &MilpModel, sol: &SolveResult) -> Result<OperationPlan> {
    let (values, solver_objective) = match (sol.status, &sol.values, sol.objective) {
        (SolveStatus::Optimal | SolveStatus::Feasible, Some(v), Some(obj)) => (v, obj),
        _ => {
            return Err(Error::Plan(format!(
                "no plan: solver status {}",
                sol.status
            )))
        }
    };
    let ctx = model
        .context
        .as_ref()
        .ok_or_else(|| Error::Plan("model carries no build context".into()))?;
    if values.len() != model.num_vars() {
        return Err(Error::Plan(format!(
            "solution has {} values for {} variables",
            values.len(),
            model.num_vars()
        )));
    }

    let mut x = values.clone();
    for (j, v) in model.vars.iter().enumerate() {
        if v.binary {
            let r = x[j].round();
            if (x[j] - r).abs() >= BINARY_TOLERANCE {
                return Err(Error::Plan(format!(
                    "integrality violation: {} = {}",
                    model.index.key(j),
                    x[j]
                )));
            }
            x[j] = r;
        }
    }
    let max_residual = model.max_violation(&x);
    if max_residual > RESIDUAL_TOLERANCE {
        let worst = model
            .constraints
            .iter()
            .max_by(|a, b| a.violation(&x).total_cmp(&b.violation(&x)))
            .map(|c| format!("{} row residual {}", c.tag, c.violation(&x)))
            .unwrap_or_default();
        return Err(Error::Plan(format!(
            "residual {max_residual} exceeds {RESIDUAL_TOLERANCE}: {worst}"
        )));
    }

    let objective = recompute_objective(ctx, model, &x);
    if (objective - solver_objective).abs() > 1e-6 * objective.abs().max(1.0) {
        return Err(Error::Plan(format!(
            "objective mismatch: solver {solver_objective}, recomputed {objective}"
        )));
    }

    let dec = Decoder { model, x: &x };
    let case = &ctx.case;
    let t_len = case.horizon.periods;
    let flag = |key: &dyn Fn(usize) -> VarKey| -> Vec<bool> {
        (0..t_len).map(|t| dec.get(&key(t)) > 0.5).collect()
    };
    let load_pickup = (0..case.loads.len())
        .map(|load| flag(&|t| VarKey::LoadPickup { load, t }))
        .collect();
    let electrolyzer_on: Vec<Vec<bool>> = (0..case.hydrogen_sources.len())
        .map(|h| flag(&|t| VarKey::ElectrolyzerOn { h, t }))
        .collect();
    let fuel_cell_on: Vec<Vec<bool>> = (0..case.hydrogen_sources.len())
        .map(|h| flag(&|t| VarKey::FuelCellOn { h, t }))
        .collect();
    let power_setpoint = (0..case.renewables.len())
        .map(|r| {
            model.var(&VarKey::PowerSetpoint { r, t: 0 })?;
            Some((0..t_len).map(|t| dec.get(&VarKey::PowerSetpoint { r, t })).collect())
        })
        .collect();

    let mut scenarios = Vec::with_capacity(ctx.scenarios.len());
    for s in 0..ctx.scenarios.len() {
        let series = |n: usize, key: &dyn Fn(usize, usize) -> VarKey| -> Vec<Vec<f64>> {
            (0..n)
                .map(|i| (0..t_len).map(|t| dec.get(&key(i, t))).collect())
                .collect()
        };
        let nh = case.hydrogen_sources.len();
        let nr = case.renewables.len();
        let electrolyzer_power = series(nh, &|h, t| VarKey::ElectrolyzerDraw { s, h, t });
        let fuel_cell_power = series(nh, &|h, t| VarKey::FuelCellOutput { s, h, t });
        let solver_tank = series(nh, &|h, t| VarKey::TankLevel { s, h, t });

        let mut tank = Vec::with_capacity(nh);
        for (h, hs) in case.hydrogen_sources.iter().enumerate() {
            let mut level = hs.h_init;
            let mut traj = Vec::with_capacity(t_len);
            for t in 0..t_len {
                let mode = HydrogenMode::from_flags(electrolyzer_on[h][t], fuel_cell_on[h][t]);
                let (pe, pf) = (electrolyzer_power[h][t], fuel_cell_power[h][t]);
                level = match tank_step(level, mode, pe, pf, case.horizon.step_hours, hs) {
                    Ok(l) => l,
                    Err(v) if v.level >= -RESIDUAL_TOLERANCE && v.level <= hs.h_max + RESIDUAL_TOLERANCE => v.level,
                    Err(v) => {
                        return Err(Error::Plan(format!(
                            "tank {} leaves [0, {}] at t={t}: {}",
                            hs.id, hs.h_max, v.level
                        )))
                    }
                };
                if (level - solver_tank[h][t]).abs() > RESIDUAL_TOLERANCE {
                    return Err(Error::Plan(format!(
                        "tank {} at t={t}: solver level {} vs replayed {level}",
                        hs.id, solver_tank[h][t]
                    )));
                }
                traj.push(level);
            }
            tank.push(traj);
        }

        let profile = &ctx.scenarios.scenarios[s];
        scenarios.push(ScenarioState {
            label: ctx.scenarios.labels[s].clone(),
            weight: ctx.scenarios.weights[s],
            frequency: (0..t_len).map(|t| dec.get(&VarKey::Frequency { s, t })).collect(),
            voltage: series(case.buses.len(), &|bus, t| VarKey::Voltage { s, bus, t }),
            flow_p: series(case.branches.len(), &|branch, t| VarKey::FlowP { s, branch, t }),
            flow_q: series(case.branches.len(), &|branch, t| VarKey::FlowQ { s, branch, t }),
            electrolyzer_power,
            fuel_cell_power,
            hydrogen_p: series(nh, &|h, t| VarKey::HydrogenP { s, h, t }),
            hydrogen_q: series(nh, &|h, t| VarKey::HydrogenQ { s, h, t }),
            tank,
            renewable_p: series(nr, &|r, t| VarKey::RenewableP { s, r, t }),
            renewable_q: series(nr, &|r, t| VarKey::RenewableQ { s, r, t }),
            renewable_mpp: profile.renewable_mpp.clone(),
            load_p: profile.load_p.clone(),
        });
    }

    Ok(OperationPlan {
        options: ctx.options,
        objective,
        solver_objective,
        load_pickup,
        electrolyzer_on,
        fuel_cell_on,
        power_setpoint,
        scenarios,
        max_residual,
    })
}

/// Weighted served load, summed straight from the scenario data rather
/// than the model's objective row.
fn recompute_objective(ctx: &ModelContext, model: &MilpModel, x: &[f64]) -> f64 {
    let mut total = 0.0;
    for (s, profile) in ctx.scenarios.scenarios.iter().enumerate() {
        let eta = ctx.scenarios.weights[s];
        for (l, load) in ctx.case.loads.iter().enumerate() {
            for t in 0..ctx.case.horizon.periods {
                let lam = model
                    .var(&VarKey::LoadPickup { load: l, t })
                    .map_or(0.0, |j| x[j]);
                total += eta * lam * load.weight * profile.load_p[l][t];
            }
        }
    }
    total
}

struct Decoder<'a> {
    model: &'a MilpModel,
    x: &'a [f64],
}

impl Decoder<'_> {
    fn get(&self, key: &VarKey) -> f64 {
        let id = self
            .model
            .var(key)
            .unwrap_or_else(|| panic!("model has no variable {key}"));
        self.x[id]
    }
}
