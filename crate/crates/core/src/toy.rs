//! Small hand-built per-unit cases for tests, examples and oracle checks.

use crate::case::{
    Branch, Bus, ControlMode, Horizon, HydrogenSource, LoadPoint, MicrogridCase, RenewableSource,
    SystemParams, VoltVarCurve,
};

pub fn volt_var() -> VoltVarCurve {
    VoltVarCurve {
        q_gen_max: 0.3,
        q_abs_max: 0.3,
        u_gen_start: 0.98,
        u_abs_start: 1.02,
        d_gen: 10.0,
        d_abs: 10.0,
    }
}

pub fn system() -> SystemParams {
    SystemParams {
        f_nominal: 60.0,
        f_min: 59.5,
        f_max: 60.5,
        u_nominal: 1.0,
        s_base_va: 1e6,
        u_base_v: 4160.0,
    }
}

pub fn bus(id: &str) -> Bus {
    Bus {
        id: id.into(),
        u_min: 0.95,
        u_max: 1.05,
    }
}

pub fn branch(from: &str, to: &str) -> Branch {
    Branch {
        from: from.into(),
        to: to.into(),
        r: 0.01,
        x: 0.02,
        p_min: -2.0,
        p_max: 2.0,
        q_min: -1.0,
        q_max: 1.0,
    }
}

pub fn hydrogen(bus: &str) -> HydrogenSource {
    HydrogenSource {
        id: format!("h2_{bus}"),
        bus: bus.into(),
        p_ely_max: 0.4,
        p_fc_max: 0.6,
        f_ely_knee: 60.2,
        f_fc_knee: 59.8,
        d_ely: 4.0 / 3.0,
        d_fc: 1.5,
        eta_ely: 0.7,
        eta_fc: 0.6,
        h_max: 2.0,
        h_init: 1.0,
        volt_var: volt_var(),
    }
}

pub fn renewable(bus: &str, mode: ControlMode) -> RenewableSource {
    RenewableSource {
        id: format!("wind_{bus}"),
        bus: bus.into(),
        f_knee: 60.0,
        d_droop: 1.2,
        control_mode: mode,
        volt_var: volt_var(),
    }
}

pub fn load(bus: &str, weight: f64) -> LoadPoint {
    LoadPoint {
        id: format!("load_{bus}"),
        bus: bus.into(),
        weight,
        power_factor: 0.95,
    }
}

/// Two buses, hydrogen at bus 1, a droop renewable and a critical load at bus 2.
pub fn two_bus_case() -> MicrogridCase {
    MicrogridCase {
        system: system(),
        horizon: Horizon {
            periods: 2,
            step_hours: 0.25,
        },
        buses: vec![bus("1"), bus("2")],
        branches: vec![branch("1", "2")],
        hydrogen_sources: vec![hydrogen("1")],
        renewables: vec![renewable("2", ControlMode::Droop)],
        loads: vec![load("2", 0.8)],
    }
}

/// One bus with a hydrogen source and a single load, one period.
pub fn single_bus_hydrogen_case(h_init: f64) -> MicrogridCase {
    let mut h = hydrogen("1");
    h.h_init = h_init;
    MicrogridCase {
        system: system(),
        horizon: Horizon {
            periods: 1,
            step_hours: 0.25,
        },
        buses: vec![bus("1")],
        branches: vec![],
        hydrogen_sources: vec![h],
        renewables: vec![],
        loads: vec![load("1", 0.9)],
    }
}

/// Two buses, a renewable at bus 1 and loads at both buses, no hydrogen.
pub fn two_bus_renewable_case(periods: usize, mode: ControlMode) -> MicrogridCase {
    MicrogridCase {
        system: system(),
        horizon: Horizon {
            periods,
            step_hours: 0.25,
        },
        buses: vec![bus("1"), bus("2")],
        branches: vec![branch("1", "2")],
        hydrogen_sources: vec![],
        renewables: vec![renewable("1", mode)],
        loads: vec![load("1", 0.4), load("2", 0.85)],
    }
}
