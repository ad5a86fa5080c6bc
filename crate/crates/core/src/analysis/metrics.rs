use serde::{Deserialize, Serialize};

use crate::case::MicrogridCase;
use crate::milp::OperationPlan;
use crate::scenario::ScenarioSet;

/// Which loads a served-ratio index covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadClass {
    All,
    Critical,
    NonCritical,
}

impl LoadClass {
    fn contains(self, weight_critical: bool) -> bool {
        match self {
            LoadClass::All => true,
            LoadClass::Critical => weight_critical,
            LoadClass::NonCritical => !weight_critical,
        }
    }
}

/// Largest change of one device's active output between consecutive periods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerStep {
    pub device: String,
    /// Worst case over periods and scenarios, p.u.
    pub max_step: f64,
}

/// Tank level of one source in one scenario, starting with the initial fill.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HydrogenTrajectory {
    pub source: String,
    pub scenario: String,
    pub levels: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResilienceReport {
    pub objective: f64,
    pub lsr_all: f64,
    pub lsr_critical: f64,
    pub lsr_noncritical: f64,
    /// Percent of available renewable energy used.
    pub renewable_consumption_ratio: f64,
    pub avg_frequency_variation_hz: f64,
    pub max_frequency_variation_hz: f64,
    pub avg_voltage_variation_pu: f64,
    pub max_voltage_variation_pu: f64,
    pub avg_voltage_variation_v: f64,
    pub max_voltage_variation_v: f64,
    pub power_steps: Vec<PowerStep>,
    pub remaining_hydrogen: Vec<HydrogenTrajectory>,
}

impl ResilienceReport {
    /// Largest power step over all devices, zero without devices.
    pub fn max_power_step(&self) -> f64 {
        self.power_steps.iter().map(|p| p.max_step).fold(0.0, f64::max)
    }

    /// `(metric, value)` pairs in a fixed order, for flat tables.
    pub fn scalar_metrics(&self) -> Vec<(String, f64)> {
        let mut out: Vec<(String, f64)> = vec![
            ("objective".into(), self.objective),
            ("lsr_all".into(), self.lsr_all),
            ("lsr_critical".into(), self.lsr_critical),
            ("lsr_noncritical".into(), self.lsr_noncritical),
            ("renewable_consumption_ratio".into(), self.renewable_consumption_ratio),
            ("avg_frequency_variation_hz".into(), self.avg_frequency_variation_hz),
            ("max_frequency_variation_hz".into(), self.max_frequency_variation_hz),
            ("avg_voltage_variation_pu".into(), self.avg_voltage_variation_pu),
            ("max_voltage_variation_pu".into(), self.max_voltage_variation_pu),
            ("avg_voltage_variation_v".into(), self.avg_voltage_variation_v),
            ("max_voltage_variation_v".into(), self.max_voltage_variation_v),
        ];
        for p in &self.power_steps {
            out.push((format!("max_power_step:{}", p.device), p.max_step));
        }
        for h in &self.remaining_hydrogen {
            if let Some(&last) = h.levels.last() {
                out.push((format!("final_hydrogen:{}:{}", h.source, h.scenario), last));
            }
        }
        out
    }
}

/// Weighted served share of the load energy in `class`, percent. An empty
/// class (or one with no demand) counts as fully served.
pub fn compute_lsr(plan: &OperationPlan, case: &MicrogridCase, class: LoadClass) -> f64 {
    let (mut served, mut demand) = (0.0, 0.0);
    for sc in &plan.scenarios {
        for (l, load) in case.loads.iter().enumerate() {
            if !class.contains(load.is_critical()) {
                continue;
            }
            for (t, &p) in sc.load_p[l].iter().enumerate() {
                demand += sc.weight * p;
                if plan.load_pickup[l][t] {
                    served += sc.weight * p;
                }
            }
        }
    }
    if demand > 0.0 {
        100.0 * served / demand
    } else {
        100.0
    }
}

/// All resilience indexes of `plan`.
///
/// Scenario weights, loads and MPPs are read from `scen`; frequencies,
/// voltages and device outputs from the plan. Averages and maxima of the
/// frequency and voltage variation are plain statistics over every
/// (scenario, period) and (scenario, period, bus) respectively.
pub fn compute_resilience_report(plan: &OperationPlan, case: &MicrogridCase, scen: &ScenarioSet) -> ResilienceReport {
    let sys = &case.system;
    let (mut used, mut avail) = (0.0, 0.0);
    for (sc, (eta, prof)) in plan.scenarios.iter().zip(scen.weights.iter().zip(&scen.scenarios)) {
        for (r, mpp) in prof.renewable_mpp.iter().enumerate() {
            for (t, &m) in mpp.iter().enumerate() {
                used += eta * sc.renewable_p[r][t];
                avail += eta * m;
            }
        }
    }
    let renewable_consumption_ratio = if avail > 0.0 {
        (100.0 * used / avail).clamp(0.0, 100.0)
    } else {
        100.0
    };

    let f_dev: Vec<f64> = plan
        .scenarios
        .iter()
        .flat_map(|sc| sc.frequency.iter().map(|f| (f - sys.f_nominal).abs()))
        .collect();
    let u_dev: Vec<f64> = plan
        .scenarios
        .iter()
        .flat_map(|sc| sc.voltage.iter().flatten().map(|u| (u - sys.u_nominal).abs()))
        .collect();
    let (avg_f, max_f) = mean_max(&f_dev);
    let (avg_u, max_u) = mean_max(&u_dev);

    let mut power_steps = Vec::new();
    let worst_step = |series: &dyn Fn(usize) -> Vec<f64>| -> f64 {
        (0..plan.scenarios.len())
            .map(|s| {
                series(s)
                    .windows(2)
                    .map(|w| (w[1] - w[0]).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    };
    for (h, hs) in case.hydrogen_sources.iter().enumerate() {
        power_steps.push(PowerStep {
            device: hs.id.clone(),
            max_step: worst_step(&|s| plan.scenarios[s].hydrogen_p[h].clone()),
        });
    }
    for (r, rs) in case.renewables.iter().enumerate() {
        power_steps.push(PowerStep {
            device: rs.id.clone(),
            max_step: worst_step(&|s| plan.scenarios[s].renewable_p[r].clone()),
        });
    }

    let mut remaining_hydrogen = Vec::new();
    for (h, hs) in case.hydrogen_sources.iter().enumerate() {
        for sc in &plan.scenarios {
            let mut levels = vec![hs.h_init];
            levels.extend_from_slice(&sc.tank[h]);
            remaining_hydrogen.push(HydrogenTrajectory {
                source: hs.id.clone(),
                scenario: sc.label.clone(),
                levels,
            });
        }
    }

    ResilienceReport {
        objective: plan.objective,
        lsr_all: compute_lsr(plan, case, LoadClass::All),
        lsr_critical: compute_lsr(plan, case, LoadClass::Critical),
        lsr_noncritical: compute_lsr(plan, case, LoadClass::NonCritical),
        renewable_consumption_ratio,
        avg_frequency_variation_hz: avg_f,
        max_frequency_variation_hz: max_f,
        avg_voltage_variation_pu: avg_u,
        max_voltage_variation_pu: max_u,
        avg_voltage_variation_v: avg_u * sys.u_base_v,
        max_voltage_variation_v: max_u * sys.u_base_v,
        power_steps,
        remaining_hydrogen,
    }
}

fn mean_max(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let sum: f64 = v.iter().sum();
    (sum / v.len() as f64, v.iter().copied().fold(0.0, f64::max))
}
