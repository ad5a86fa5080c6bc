//! Microgrid case data: network, devices, horizon and security bounds.
//!
//! A [`MicrogridCase`] held in memory is always in per-unit form once it has
//! passed through [`load_case_file`]. Frequencies stay in Hz, energies are
//! per-unit power times hours.

mod file;
mod per_unit;
mod validate;

use serde::{Deserialize, Serialize};

pub use file::{load_case_file, read_case_file, save_case_file, CaseFile, Units};
pub use per_unit::per_unit_normalize;
pub use validate::{validate_case, ValidationIssue, ValidationReport};

/// Loads with a weight strictly above this value are critical.
pub const CRITICAL_WEIGHT: f64 = 0.7;

/// Power factor assumed for a load that does not specify one.
pub const DEFAULT_POWER_FACTOR: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: String,
    pub u_min: f64,
    pub u_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub from: String,
    pub to: String,
    pub r: f64,
    pub x: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub q_min: f64,
    pub q_max: f64,
}

/// Volt-var droop with a dead band between `u_gen_start` and `u_abs_start`.
///
/// Below the dead band the device generates `d_gen * (u_gen_start - u)`
/// capped at `q_gen_max`; above it absorbs `d_abs * (u - u_abs_start)` capped
/// at `q_abs_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoltVarCurve {
    pub q_gen_max: f64,
    pub q_abs_max: f64,
    pub u_gen_start: f64,
    pub u_abs_start: f64,
    pub d_gen: f64,
    pub d_abs: f64,
}

/// Electrolyzer, fuel cell and tank sharing one bus.
///
/// The fuel cell delivers full power below `f_fc_knee` and backs off with
/// slope `d_fc` above it. The electrolyzer draws full power above
/// `f_ely_knee` and backs off with slope `d_ely` below it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HydrogenSource {
    pub id: String,
    pub bus: String,
    pub p_ely_max: f64,
    pub p_fc_max: f64,
    pub f_ely_knee: f64,
    pub f_fc_knee: f64,
    pub d_ely: f64,
    pub d_fc: f64,
    pub eta_ely: f64,
    pub eta_fc: f64,
    pub h_max: f64,
    pub h_init: f64,
    pub volt_var: VoltVarCurve,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlMode {
    Droop,
    ConstantPq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenewableSource {
    pub id: String,
    pub bus: String,
    pub f_knee: f64,
    pub d_droop: f64,
    pub control_mode: ControlMode,
    pub volt_var: VoltVarCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadPoint {
    pub id: String,
    pub bus: String,
    pub weight: f64,
    #[serde(default = "default_power_factor")]
    pub power_factor: f64,
}

fn default_power_factor() -> f64 {
    DEFAULT_POWER_FACTOR
}

impl LoadPoint {
    pub fn is_critical(&self) -> bool {
        self.weight > CRITICAL_WEIGHT
    }

    /// Ratio Q/P implied by the power factor, `tan(acos(pf))`.
    pub fn q_per_p(&self) -> f64 {
        self.power_factor.acos().tan()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Horizon {
    pub periods: usize,
    pub step_hours: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub f_nominal: f64,
    pub f_min: f64,
    pub f_max: f64,
    pub u_nominal: f64,
    /// Power base in VA.
    pub s_base_va: f64,
    /// Voltage base in V.
    pub u_base_v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicrogridCase {
    pub system: SystemParams,
    pub horizon: Horizon,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    #[serde(default)]
    pub hydrogen_sources: Vec<HydrogenSource>,
    #[serde(default)]
    pub renewables: Vec<RenewableSource>,
    #[serde(default)]
    pub loads: Vec<LoadPoint>,
}

impl MicrogridCase {
    pub fn bus_index(&self, id: &str) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    /// Bus index for a reference already checked by validation.
    pub(crate) fn bus_of(&self, id: &str) -> usize {
        self.bus_index(id)
            .unwrap_or_else(|| panic!("unknown bus {id:?} in a validated case"))
    }

    pub fn num_periods(&self) -> usize {
        self.horizon.periods
    }

    /// Bus where the network is rooted for radial sweeps: the first hydrogen
    /// source, else the first renewable, else the first bus.
    pub fn root_bus(&self) -> usize {
        self.hydrogen_sources
            .first()
            .map(|h| h.bus.as_str())
            .or_else(|| self.renewables.first().map(|r| r.bus.as_str()))
            .and_then(|id| self.bus_index(id))
            .unwrap_or(0)
    }

    /// Copy of the case with every hydrogen source removed.
    pub fn without_hydrogen(&self) -> MicrogridCase {
        MicrogridCase {
            hydrogen_sources: Vec::new(),
            ..self.clone()
        }
    }

    /// Copy of the case with every tank filled to `fill * h_max`.
    pub fn with_fill(&self, fill: f64) -> MicrogridCase {
        let mut case = self.clone();
        for h in &mut case.hydrogen_sources {
            h.h_init = fill * h.h_max;
        }
        case
    }

    pub fn with_control_modes(&self, modes: &[ControlMode]) -> MicrogridCase {
        let mut case = self.clone();
        for (r, mode) in case.renewables.iter_mut().zip(modes) {
            r.control_mode = *mode;
        }
        case
    }
}
