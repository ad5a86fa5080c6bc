//! Closed-form droop characteristics of every device.
//!
//! These evaluators are the reference the MILP encodings are checked
//! against, and the ex-post model used to replay a dispatch under droop
//! control. All functions are pure.

use serde::{Deserialize, Serialize};

use crate::case::{HydrogenSource, RenewableSource, VoltVarCurve};

/// Operating point seen by a device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceState {
    /// System frequency in Hz.
    pub frequency: f64,
    /// Bus voltage in p.u.
    pub voltage: f64,
    /// Available maximum power point, renewables only.
    pub mpp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HydrogenMode {
    Electrolyzer,
    FuelCell,
    Idle,
}

impl HydrogenMode {
    pub fn from_flags(ely: bool, fc: bool) -> Self {
        match (ely, fc) {
            (true, false) => HydrogenMode::Electrolyzer,
            (false, true) => HydrogenMode::FuelCell,
            (false, false) => HydrogenMode::Idle,
            (true, true) => panic!("electrolyzer and fuel cell cannot both be on"),
        }
    }
}

/// Power drawn by the electrolyzer at frequency `f`: full power at or above
/// the knee, linear back-off below it, never negative.
pub fn electrolyzer_power(f: f64, hs: &HydrogenSource) -> f64 {
    if f >= hs.f_ely_knee {
        return hs.p_ely_max;
    }
    (hs.p_ely_max - hs.d_ely * (hs.f_ely_knee - f)).max(0.0)
}

/// Power delivered by the fuel cell at frequency `f`; mirror image of
/// [`electrolyzer_power`], non-increasing in `f`.
pub fn fuelcell_power(f: f64, hs: &HydrogenSource) -> f64 {
    if f <= hs.f_fc_knee {
        return hs.p_fc_max;
    }
    (hs.p_fc_max - hs.d_fc * (f - hs.f_fc_knee)).max(0.0)
}

/// Droop-mode renewable output: the MPP up to the knee, curtailed linearly
/// above it.
pub fn renewable_power(f: f64, mpp: f64, rs: &RenewableSource) -> f64 {
    if f <= rs.f_knee {
        return mpp;
    }
    (mpp - rs.d_droop * (f - rs.f_knee)).max(0.0)
}

/// Constant-PQ renewable output: the setpoint, capped by what is available.
pub fn constant_pq_power(setpoint: f64, mpp: f64) -> f64 {
    setpoint.min(mpp)
}

/// Reactive output (generation positive) of a volt-var curve with dead band.
pub fn voltvar_reactive_power(u: f64, c: &VoltVarCurve) -> f64 {
    if u <= c.u_gen_start {
        (c.d_gen * (c.u_gen_start - u)).min(c.q_gen_max)
    } else if u < c.u_abs_start {
        0.0
    } else {
        -(c.d_abs * (u - c.u_abs_start)).min(c.q_abs_max)
    }
}

/// Net active injection of a hydrogen source, positive when producing.
pub fn hydrogen_net_injection(mode: HydrogenMode, p_ely: f64, p_fc: f64) -> f64 {
    match mode {
        HydrogenMode::FuelCell => p_fc,
        HydrogenMode::Electrolyzer => -p_ely,
        HydrogenMode::Idle => 0.0,
    }
}

/// Tank level after a step that left the admissible range `[0, h_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TankViolation {
    pub level: f64,
}

/// Signed energy change of the tank over one step.
pub fn tank_increment(mode: HydrogenMode, p_ely: f64, p_fc: f64, dt: f64, hs: &HydrogenSource) -> f64 {
    match mode {
        HydrogenMode::Electrolyzer => p_ely * hs.eta_ely * dt,
        HydrogenMode::FuelCell => -(p_fc / hs.eta_fc) * dt,
        HydrogenMode::Idle => 0.0,
    }
}

/// Advance the tank by one step of `dt` hours. The new level is always
/// computed; a level outside `[0, h_max]` comes back as `Err`.
pub fn tank_step(
    h_prev: f64,
    mode: HydrogenMode,
    p_ely: f64,
    p_fc: f64,
    dt: f64,
    hs: &HydrogenSource,
) -> Result<f64, TankViolation> {
    let level = h_prev + tank_increment(mode, p_ely, p_fc, dt, hs);
    if (0.0..=hs.h_max).contains(&level) {
        Ok(level)
    } else {
        Err(TankViolation { level })
    }
}

/// Active and reactive output of a droop-mode renewable at `state`.
pub fn renewable_response(state: &DeviceState, rs: &RenewableSource) -> (f64, f64) {
    (
        renewable_power(state.frequency, state.mpp, rs),
        voltvar_reactive_power(state.voltage, &rs.volt_var),
    )
}

/// Active and reactive injection of a hydrogen source at `state`.
pub fn hydrogen_response(state: &DeviceState, mode: HydrogenMode, hs: &HydrogenSource) -> (f64, f64) {
    let p = hydrogen_net_injection(
        mode,
        electrolyzer_power(state.frequency, hs),
        fuelcell_power(state.frequency, hs),
    );
    (p, voltvar_reactive_power(state.voltage, &hs.volt_var))
}
