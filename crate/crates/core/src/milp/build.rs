//! Assembly of the stochastic islanded-dispatch MILP.
//!
//! Decisions shared by all scenarios: load pickup per load and period,
//! electrolyzer/fuel-cell mode flags per source and period, and the power
//! setpoint of each constant-PQ renewable. Everything else (frequency,
//! voltages, flows, device outputs, tank levels) is per scenario.

use serde::{Deserialize, Serialize};

use crate::case::{validate_case, ControlMode, MicrogridCase};
use crate::error::{Error, Result};
use crate::scenario::ScenarioSet;

use super::piecewise::{compute_big_m, linearize_piecewise_affine, PiecewiseCurve};
use super::product::linearize_binary_product;
use super::{CurveRef, MilpModel, ModelContext, Sense, Tag, VarId, VarKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildOptions {
    /// Tie device outputs to frequency and voltage through their droop
    /// characteristics. When off, outputs are free within their ratings and
    /// frequency and voltages only obey their security bounds.
    pub droop_coupling: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            droop_coupling: true,
        }
    }
}

/// Closed-form variable count of [`build_model`].
///
/// With `L` loads, `H` hydrogen sources, `Rd` droop and `Rc` constant-PQ
/// renewables, `N` buses, `B` branches, `T` periods and `S` scenarios:
///
/// ```text
/// shared:        T (L + 2H + Rc)
/// per (s, t):    1 + N + 2B + 7H + 2(Rd + Rc) + Rc
///                + segments: 11H + 8Rd          (droop coupling on)
/// ```
///
/// The `Rc` constant-PQ terms are the setpoint (shared) and the min-selector
/// binary (per scenario). Without droop coupling there are no segment
/// indicators, and constant-PQ renewables are dispatched like the others
/// (no setpoint, no selector).
pub fn expected_variable_count(case: &MicrogridCase, scenarios: usize, options: BuildOptions) -> usize {
    let t = case.horizon.periods;
    let l = case.loads.len();
    let h = case.hydrogen_sources.len();
    let rc = case
        .renewables
        .iter()
        .filter(|r| r.control_mode == ControlMode::ConstantPq)
        .count();
    let rd = case.renewables.len() - rc;
    let (n, b) = (case.buses.len(), case.branches.len());
    let mut shared = l + 2 * h;
    let mut per = 1 + n + 2 * b + 7 * h + 2 * (rd + rc);
    if options.droop_coupling {
        shared += rc;
        per += rc + 11 * h + 8 * rd;
    }
    t * shared + scenarios * t * per
}

/// Build the dispatch MILP for `case` under `scen`.
pub fn build_model(case: &MicrogridCase, scen: &ScenarioSet, options: BuildOptions) -> Result<MilpModel> {
    let report = validate_case(case);
    if !report.is_empty() {
        return Err(Error::Validation(report));
    }
    scen.check_against(case)?;
    Builder::new(case, scen, options).build()
}

struct Builder<'a> {
    case: &'a MicrogridCase,
    scen: &'a ScenarioSet,
    opts: BuildOptions,
    m: MilpModel,
}

impl<'a> Builder<'a> {
    fn new(case: &'a MicrogridCase, scen: &'a ScenarioSet, opts: BuildOptions) -> Self {
        Builder {
            case,
            scen,
            opts,
            m: MilpModel::new(),
        }
    }

    fn is_pq(&self, r: usize) -> bool {
        self.opts.droop_coupling && self.case.renewables[r].control_mode == ControlMode::ConstantPq
    }

    fn build(mut self) -> Result<MilpModel> {
        let case = self.case;
        let scen = self.scen;
        let t_len = case.horizon.periods;
        let dt = case.horizon.step_hours;

        // shared decisions
        let mut pickup = vec![vec![0; t_len]; case.loads.len()];
        for (l, row) in pickup.iter_mut().enumerate() {
            for (t, v) in row.iter_mut().enumerate() {
                *v = self.m.add_binary(VarKey::LoadPickup { load: l, t });
            }
        }
        let mut ely_on = vec![vec![0; t_len]; case.hydrogen_sources.len()];
        let mut fc_on = ely_on.clone();
        for h in 0..case.hydrogen_sources.len() {
            for t in 0..t_len {
                ely_on[h][t] = self.m.add_binary(VarKey::ElectrolyzerOn { h, t });
                fc_on[h][t] = self.m.add_binary(VarKey::FuelCellOn { h, t });
                self.m.add_constraint(
                    &[(ely_on[h][t], 1.0), (fc_on[h][t], 1.0)],
                    Sense::Le,
                    1.0,
                    Tag::ModeExclusion,
                );
            }
        }
        let mut setpoint: Vec<Option<Vec<VarId>>> = vec![None; case.renewables.len()];
        for (r, slot) in setpoint.iter_mut().enumerate() {
            if !self.is_pq(r) {
                continue;
            }
            let vars = (0..t_len)
                .map(|t| {
                    let ub = scen
                        .scenarios
                        .iter()
                        .map(|p| p.renewable_mpp[r][t])
                        .fold(0.0, f64::max);
                    self.m.add_var(VarKey::PowerSetpoint { r, t }, 0.0, ub, false)
                })
                .collect();
            *slot = Some(vars);
        }

        for s in 0..scen.len() {
            for t in 0..t_len {
                self.period(s, t, dt, &pickup, &ely_on, &fc_on, &setpoint)?;
            }
        }

        // objective: sum_s eta_s sum_t sum_l lambda w P^L
        for (l, load) in case.loads.iter().enumerate() {
            for t in 0..t_len {
                let expected: f64 = scen
                    .weights
                    .iter()
                    .zip(&scen.scenarios)
                    .map(|(eta, p)| eta * p.load_p[l][t])
                    .sum();
                self.m.set_objective(pickup[l][t], load.weight * expected);
            }
        }

        self.m.context = Some(ModelContext {
            case: case.clone(),
            scenarios: scen.clone(),
            options: self.opts,
        });
        debug_assert!(self.m.is_well_formed());
        Ok(self.m)
    }

    #[allow(clippy::too_many_arguments)]
    fn period(
        &mut self,
        s: usize,
        t: usize,
        dt: f64,
        pickup: &[Vec<VarId>],
        ely_on: &[Vec<VarId>],
        fc_on: &[Vec<VarId>],
        setpoint: &[Option<Vec<VarId>>],
    ) -> Result<()> {
        let case = self.case;
        let sys = &case.system;
        let profile = &self.scen.scenarios[s];
        let coupled = self.opts.droop_coupling;
        let m = &mut self.m;

        let f = m.add_var(VarKey::Frequency { s, t }, sys.f_min, sys.f_max, false);
        let u: Vec<VarId> = case
            .buses
            .iter()
            .enumerate()
            .map(|(bus, b)| m.add_var(VarKey::Voltage { s, bus, t }, b.u_min, b.u_max, false))
            .collect();
        let mut flow_p = Vec::with_capacity(case.branches.len());
        let mut flow_q = Vec::with_capacity(case.branches.len());
        for (branch, br) in case.branches.iter().enumerate() {
            flow_p.push(m.add_var(VarKey::FlowP { s, branch, t }, br.p_min, br.p_max, false));
            flow_q.push(m.add_var(VarKey::FlowQ { s, branch, t }, br.q_min, br.q_max, false));
        }

        // net injections per bus, collected for the balance rows
        let n = case.buses.len();
        let mut p_inj: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); n];
        let mut q_inj: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); n];

        for (h, hs) in case.hydrogen_sources.iter().enumerate() {
            let bus = case.bus_of(&hs.bus);
            let p_ely = m.add_var(VarKey::ElectrolyzerPower { s, h, t }, 0.0, hs.p_ely_max, false);
            let p_fc = m.add_var(VarKey::FuelCellPower { s, h, t }, 0.0, hs.p_fc_max, false);
            let draw = m.add_var(VarKey::ElectrolyzerDraw { s, h, t }, 0.0, hs.p_ely_max, false);
            let out = m.add_var(VarKey::FuelCellOutput { s, h, t }, 0.0, hs.p_fc_max, false);
            let p_h = m.add_var(VarKey::HydrogenP { s, h, t }, -hs.p_ely_max, hs.p_fc_max, false);
            let vv = &hs.volt_var;
            let q_h = m.add_var(VarKey::HydrogenQ { s, h, t }, -vv.q_abs_max, vv.q_gen_max, false);
            let tank = m.add_var(VarKey::TankLevel { s, h, t }, 0.0, hs.h_max, false);

            if coupled {
                let curve = PiecewiseCurve::electrolyzer(hs);
                let bm = compute_big_m(&curve, (sys.f_min, sys.f_max), (0.0, hs.p_ely_max))?;
                let key = |k| VarKey::Segment { s, t, curve: CurveRef::Electrolyzer(h), k };
                linearize_piecewise_affine(m, &curve, f, p_ely, &bm, key, Tag::ElectrolyzerDroop)?;

                let curve = PiecewiseCurve::fuel_cell(hs);
                let bm = compute_big_m(&curve, (sys.f_min, sys.f_max), (0.0, hs.p_fc_max))?;
                let key = |k| VarKey::Segment { s, t, curve: CurveRef::FuelCell(h), k };
                linearize_piecewise_affine(m, &curve, f, p_fc, &bm, key, Tag::FuelCellDroop)?;

                let curve = PiecewiseCurve::volt_var(vv);
                let bm = compute_big_m(
                    &curve,
                    (m.vars[u[bus]].lb, m.vars[u[bus]].ub),
                    (-vv.q_abs_max, vv.q_gen_max),
                )?;
                let key = |k| VarKey::Segment { s, t, curve: CurveRef::HydrogenVoltVar(h), k };
                linearize_piecewise_affine(m, &curve, u[bus], q_h, &bm, key, Tag::VoltVar)?;
            }

            linearize_binary_product(m, ely_on[h][t], p_ely, draw, Tag::ProductLinearization)?;
            linearize_binary_product(m, fc_on[h][t], p_fc, out, Tag::ProductLinearization)?;
            m.add_constraint(
                &[(p_h, 1.0), (out, -1.0), (draw, 1.0)],
                Sense::Eq,
                0.0,
                Tag::HydrogenInjection,
            );

            // H_t - H_{t-1} + dt/eta_fc * out - dt*eta_ely * draw = 0, H_{-1} = h_init
            let mut terms = vec![
                (tank, 1.0),
                (out, dt / hs.eta_fc),
                (draw, -dt * hs.eta_ely),
            ];
            let rhs = if t == 0 {
                hs.h_init
            } else {
                let prev = m.var(&VarKey::TankLevel { s, h, t: t - 1 }).expect("previous tank level");
                terms.push((prev, -1.0));
                0.0
            };
            m.add_constraint(&terms, Sense::Eq, rhs, Tag::TankBalance);

            p_inj[bus].push((p_h, 1.0));
            q_inj[bus].push((q_h, 1.0));
        }

        for (r, rs) in case.renewables.iter().enumerate() {
            let bus = case.bus_of(&rs.bus);
            let mpp = profile.renewable_mpp[r][t];
            let p_r = m.add_var(VarKey::RenewableP { s, r, t }, 0.0, mpp, false);
            let vv = &rs.volt_var;
            let pq = rs.control_mode == ControlMode::ConstantPq;
            let (q_lo, q_hi) = if pq { (0.0, 0.0) } else { (-vv.q_abs_max, vv.q_gen_max) };
            let q_r = m.add_var(VarKey::RenewableQ { s, r, t }, q_lo, q_hi, false);

            if coupled && pq {
                let set = setpoint[r].as_ref().expect("setpoint for constant-PQ renewable")[t];
                let sel = m.add_binary(VarKey::MinSelector { s, r, t });
                let big = m.vars[set].ub.max(mpp);
                // p_r = min(set, mpp): sel = 1 picks the setpoint, sel = 0 the MPP
                m.add_constraint(&[(p_r, 1.0), (set, -1.0)], Sense::Le, 0.0, Tag::ConstantPq);
                m.add_constraint(&[(p_r, 1.0), (set, -1.0), (sel, -big)], Sense::Ge, -big, Tag::ConstantPq);
                m.add_constraint(&[(p_r, 1.0), (sel, big)], Sense::Ge, mpp, Tag::ConstantPq);
            } else if coupled {
                let curve = PiecewiseCurve::renewable(rs, mpp);
                let bm = compute_big_m(&curve, (sys.f_min, sys.f_max), (0.0, mpp))?;
                let key = |k| VarKey::Segment { s, t, curve: CurveRef::RenewableDroop(r), k };
                linearize_piecewise_affine(m, &curve, f, p_r, &bm, key, Tag::RenewableDroop)?;

                let curve = PiecewiseCurve::volt_var(vv);
                let bm = compute_big_m(
                    &curve,
                    (m.vars[u[bus]].lb, m.vars[u[bus]].ub),
                    (-vv.q_abs_max, vv.q_gen_max),
                )?;
                let key = |k| VarKey::Segment { s, t, curve: CurveRef::RenewableVoltVar(r), k };
                linearize_piecewise_affine(m, &curve, u[bus], q_r, &bm, key, Tag::VoltVar)?;
            }
            p_inj[bus].push((p_r, 1.0));
            q_inj[bus].push((q_r, 1.0));
        }

        // KCL: outgoing - incoming - injections + lambda * load = 0
        let mut p_rows = p_inj;
        let mut q_rows = q_inj;
        for row in p_rows.iter_mut().chain(q_rows.iter_mut()) {
            for term in row.iter_mut() {
                term.1 = -term.1;
            }
        }
        for (b, br) in case.branches.iter().enumerate() {
            let (from, to) = (case.bus_of(&br.from), case.bus_of(&br.to));
            p_rows[from].push((flow_p[b], 1.0));
            p_rows[to].push((flow_p[b], -1.0));
            q_rows[from].push((flow_q[b], 1.0));
            q_rows[to].push((flow_q[b], -1.0));
        }
        for (l, load) in case.loads.iter().enumerate() {
            let bus = case.bus_of(&load.bus);
            let p_load = profile.load_p[l][t];
            p_rows[bus].push((pickup[l][t], p_load));
            q_rows[bus].push((pickup[l][t], p_load * load.q_per_p()));
        }
        for bus in 0..n {
            m.add_constraint(&p_rows[bus], Sense::Eq, 0.0, Tag::ActiveBalance);
            m.add_constraint(&q_rows[bus], Sense::Eq, 0.0, Tag::ReactiveBalance);
        }

        // linearized DistFlow: U_from - U_to = (R P + X Q) / U0
        let u0 = sys.u_nominal;
        for (b, br) in case.branches.iter().enumerate() {
            let (from, to) = (case.bus_of(&br.from), case.bus_of(&br.to));
            m.add_constraint(
                &[
                    (u[from], 1.0),
                    (u[to], -1.0),
                    (flow_p[b], -br.r / u0),
                    (flow_q[b], -br.x / u0),
                ],
                Sense::Eq,
                0.0,
                Tag::VoltageDrop,
            );
        }
        Ok(())
    }
}
