//! Replay of a dispatch under droop control.
//!
//! The pickup schedule and hydrogen modes of a plan are kept; frequency is
//! then the point where the droop injections of all devices balance the
//! served load, and voltages follow from the linearized radial power flow
//! with volt-var injections. Used to measure what a dispatch that ignored
//! droop coupling actually does once devices follow their curves.

use serde::{Deserialize, Serialize};

use crate::case::{ControlMode, MicrogridCase};
use crate::milp::OperationPlan;
use crate::response::{
    electrolyzer_power, fuelcell_power, hydrogen_net_injection, renewable_power, tank_step, voltvar_reactive_power,
    HydrogenMode,
};

/// Bisection stops once the bracket is this narrow, Hz.
pub const FREQUENCY_TOLERANCE: f64 = 1e-9;
/// Bisection stops once the bracket is this narrow, p.u.
pub const VOLTAGE_TOLERANCE: f64 = 1e-10;
const SWEEP_ITERATIONS: usize = 500;

/// Counts of limits the replayed operation runs into.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExPostSummary {
    /// Periods where no frequency in the band balances the load; the
    /// frequency is pinned to the nearer band edge.
    pub frequency_clamped: usize,
    /// Periods where no root voltage balances reactive power.
    pub voltage_clamped: usize,
    /// Bus voltages outside their bounds.
    pub voltage_violations: usize,
    /// Branch flows outside their bounds.
    pub flow_violations: usize,
    /// Tank levels that would leave `[0, h_max]` (clamped).
    pub tank_violations: usize,
}

/// Root of the non-increasing `g` on `[lo, hi]` by bisection, or the band
/// edge when `g` keeps one sign. The flag tells whether it was clamped.
pub fn bisect_decreasing(g: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, bool) {
    if g(lo) < 0.0 {
        return (lo, true);
    }
    if g(hi) > 0.0 {
        return (hi, true);
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > tol {
        let mid = 0.5 * (a + b);
        let v = g(mid);
        if v == 0.0 {
            return (mid, false);
        }
        if v > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    (0.5 * (a + b), false)
}

/// Radial structure rooted at the case's root bus.
struct Tree {
    /// Buses in breadth-first order from the root.
    order: Vec<usize>,
    /// `(branch, parent bus, sign)` per bus; sign is +1 when the branch is
    /// oriented parent → child.
    parent: Vec<Option<(usize, usize, f64)>>,
}

impl Tree {
    fn new(case: &MicrogridCase) -> Tree {
        let n = case.buses.len();
        let mut adj = vec![Vec::new(); n];
        for (k, br) in case.branches.iter().enumerate() {
            let (a, b) = (case.bus_of(&br.from), case.bus_of(&br.to));
            adj[a].push((k, b, 1.0));
            adj[b].push((k, a, -1.0));
        }
        let root = case.root_bus();
        let mut parent = vec![None; n];
        let mut seen = vec![false; n];
        let mut order = vec![root];
        seen[root] = true;
        let mut i = 0;
        while i < order.len() {
            let u = order[i];
            for &(k, v, sign) in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    parent[v] = Some((k, u, sign));
                    order.push(v);
                }
            }
            i += 1;
        }
        Tree { order, parent }
    }

    /// Branch flows (in branch orientation) carrying each subtree's net
    /// demand, and the resulting voltages from `u_root`.
    fn sweep(&self, case: &MicrogridCase, p_net: &[f64], q_net: &[f64], u_root: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let nb = case.branches.len();
        let (mut fp, mut fq) = (vec![0.0; nb], vec![0.0; nb]);
        let mut sub_p: Vec<f64> = p_net.iter().map(|p| -p).collect();
        let mut sub_q: Vec<f64> = q_net.iter().map(|q| -q).collect();
        for &b in self.order.iter().rev() {
            if let Some((k, par, sign)) = self.parent[b] {
                fp[k] = sign * sub_p[b];
                fq[k] = sign * sub_q[b];
                sub_p[par] += sub_p[b];
                sub_q[par] += sub_q[b];
            }
        }
        let mut u = vec![u_root; case.buses.len()];
        let u0 = case.system.u_nominal;
        for &b in &self.order {
            if let Some((k, par, sign)) = self.parent[b] {
                let br = &case.branches[k];
                // drop along parent -> child flow
                u[b] = u[par] - sign * (br.r * fp[k] + br.x * fq[k]) / u0;
            }
        }
        (u, fp, fq)
    }
}

/// Replay `plan` under droop control; returns the replayed plan (same
/// schedules, realized states) and the limits it ran into.
pub fn droop_equilibrium(plan: &OperationPlan, case: &MicrogridCase) -> (OperationPlan, ExPostSummary) {
    let sys = &case.system;
    let tree = Tree::new(case);
    let n = case.buses.len();
    let dt = case.horizon.step_hours;
    let u_lo = case.buses.iter().map(|b| b.u_min).fold(f64::INFINITY, f64::min);
    let u_hi = case.buses.iter().map(|b| b.u_max).fold(f64::NEG_INFINITY, f64::max);
    let mut summary = ExPostSummary::default();
    let mut out = plan.clone();

    for (s, sc) in out.scenarios.iter_mut().enumerate() {
        let src = &plan.scenarios[s];
        let mut levels: Vec<f64> = case.hydrogen_sources.iter().map(|h| h.h_init).collect();
        for t in 0..case.horizon.periods {
            let modes: Vec<HydrogenMode> = (0..case.hydrogen_sources.len()).map(|h| plan.hydrogen_mode(h, t)).collect();
            let served_p: f64 = case
                .loads
                .iter()
                .enumerate()
                .filter(|(l, _)| plan.load_pickup[*l][t])
                .map(|(l, _)| src.load_p[l][t])
                .sum();
            let fixed_pq: Vec<Option<f64>> = case
                .renewables
                .iter()
                .enumerate()
                .map(|(r, rs)| {
                    (rs.control_mode == ControlMode::ConstantPq).then(|| {
                        let set = plan.power_setpoint[r].as_ref().map_or(src.renewable_p[r][t], |v| v[t]);
                        set.min(src.renewable_mpp[r][t])
                    })
                })
                .collect();
            let renewable_at = |r: usize, f: f64| match fixed_pq[r] {
                Some(p) => p,
                None => renewable_power(f, src.renewable_mpp[r][t], &case.renewables[r]),
            };
            let injection = |f: f64| -> f64 {
                let h: f64 = case
                    .hydrogen_sources
                    .iter()
                    .zip(&modes)
                    .map(|(hs, &m)| hydrogen_net_injection(m, electrolyzer_power(f, hs), fuelcell_power(f, hs)))
                    .sum();
                let r: f64 = (0..case.renewables.len()).map(|r| renewable_at(r, f)).sum();
                h + r
            };
            let (f, clamped) = bisect_decreasing(|f| injection(f) - served_p, sys.f_min, sys.f_max, FREQUENCY_TOLERANCE);
            summary.frequency_clamped += usize::from(clamped);
            sc.frequency[t] = f;

            // active injections per bus at the equilibrium frequency
            let mut p_net = vec![0.0; n];
            let mut q_load = vec![0.0; n];
            for (h, hs) in case.hydrogen_sources.iter().enumerate() {
                let (pe, pf) = match modes[h] {
                    HydrogenMode::Electrolyzer => (electrolyzer_power(f, hs), 0.0),
                    HydrogenMode::FuelCell => (0.0, fuelcell_power(f, hs)),
                    HydrogenMode::Idle => (0.0, 0.0),
                };
                sc.electrolyzer_power[h][t] = pe;
                sc.fuel_cell_power[h][t] = pf;
                sc.hydrogen_p[h][t] = pf - pe;
                p_net[case.bus_of(&hs.bus)] += pf - pe;
                levels[h] = match tank_step(levels[h], modes[h], pe, pf, dt, hs) {
                    Ok(l) => l,
                    Err(v) => {
                        summary.tank_violations += 1;
                        v.level.clamp(0.0, hs.h_max)
                    }
                };
                sc.tank[h][t] = levels[h];
            }
            for (r, rs) in case.renewables.iter().enumerate() {
                let p = renewable_at(r, f);
                sc.renewable_p[r][t] = p;
                p_net[case.bus_of(&rs.bus)] += p;
            }
            for (l, load) in case.loads.iter().enumerate() {
                if plan.load_pickup[l][t] {
                    let b = case.bus_of(&load.bus);
                    p_net[b] -= src.load_p[l][t];
                    q_load[b] += src.load_p[l][t] * load.q_per_p();
                }
            }

            // reactive injections depend on the voltages they produce
            let q_devices = |u: &[f64]| -> (Vec<f64>, Vec<f64>) {
                let hq = case
                    .hydrogen_sources
                    .iter()
                    .map(|hs| voltvar_reactive_power(u[case.bus_of(&hs.bus)], &hs.volt_var))
                    .collect();
                let rq = case
                    .renewables
                    .iter()
                    .map(|rs| match rs.control_mode {
                        ControlMode::ConstantPq => 0.0,
                        ControlMode::Droop => voltvar_reactive_power(u[case.bus_of(&rs.bus)], &rs.volt_var),
                    })
                    .collect();
                (hq, rq)
            };
            let q_net_of = |hq: &[f64], rq: &[f64]| -> Vec<f64> {
                let mut q: Vec<f64> = q_load.iter().map(|q| -q).collect();
                for (hs, v) in case.hydrogen_sources.iter().zip(hq) {
                    q[case.bus_of(&hs.bus)] += v;
                }
                for (rs, v) in case.renewables.iter().zip(rq) {
                    q[case.bus_of(&rs.bus)] += v;
                }
                q
            };
            let settle = |u_root: f64| {
                let mut u = vec![u_root; n];
                let mut state = tree.sweep(case, &p_net, &vec![0.0; n], u_root);
                for _ in 0..SWEEP_ITERATIONS {
                    let (hq, rq) = q_devices(&u);
                    let q = q_net_of(&hq, &rq);
                    state = tree.sweep(case, &p_net, &q, u_root);
                    // damped update; the volt-var feedback is negative and
                    // can overshoot on long feeders
                    let change = state.0.iter().zip(&u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    for (ub, target) in u.iter_mut().zip(&state.0) {
                        *ub = 0.5 * (*ub + target);
                    }
                    if change < 1e-13 {
                        break;
                    }
                }
                let (hq, rq) = q_devices(&u);
                let mismatch: f64 = q_net_of(&hq, &rq).iter().sum();
                (state, hq, rq, mismatch)
            };
            let (u_root, clamped) = bisect_decreasing(|ur| settle(ur).3, u_lo, u_hi, VOLTAGE_TOLERANCE);
            summary.voltage_clamped += usize::from(clamped);
            let ((u, fp, fq), hq, rq, _) = settle(u_root);
            for b in 0..n {
                sc.voltage[b][t] = u[b];
                let bus = &case.buses[b];
                if u[b] < bus.u_min - 1e-9 || u[b] > bus.u_max + 1e-9 {
                    summary.voltage_violations += 1;
                }
            }
            for (k, br) in case.branches.iter().enumerate() {
                sc.flow_p[k][t] = fp[k];
                sc.flow_q[k][t] = fq[k];
                if fp[k] < br.p_min - 1e-9 || fp[k] > br.p_max + 1e-9 || fq[k] < br.q_min - 1e-9 || fq[k] > br.q_max + 1e-9 {
                    summary.flow_violations += 1;
                }
            }
            for (h, v) in hq.into_iter().enumerate() {
                sc.hydrogen_q[h][t] = v;
            }
            for (r, v) in rq.into_iter().enumerate() {
                sc.renewable_q[r][t] = v;
            }
        }
    }
    (out, summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_finds_root() {
        let (x, clamped) = bisect_decreasing(|f| 60.1 - f, 59.5, 60.5, 1e-9);
        assert!(!clamped);
        assert!((x - 60.1).abs() < 1e-9);
    }

    #[test]
    fn bisection_clamps_to_band() {
        assert_eq!(bisect_decreasing(|f| 59.0 - f, 59.5, 60.5, 1e-9), (59.5, true));
        assert_eq!(bisect_decreasing(|f| 61.0 - f, 59.5, 60.5, 1e-9), (60.5, true));
    }
}
