use crate::error::{Error, Result};

use super::{MicrogridCase, VoltVarCurve};

/// Physical dimension of a stored case quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Quantity {
    Power,
    Energy,
    Voltage,
    Impedance,
    /// Frequency droop slope, power per Hz.
    PowerPerHz,
    /// Volt-var slope, power per voltage.
    PowerPerVoltage,
}

/// Apply `f` to every dimensional quantity of the case. Frequencies,
/// efficiencies, weights and power factors are dimensionless here and skipped.
pub(crate) fn map_quantities(
    case: &MicrogridCase,
    f: impl Fn(Quantity, f64) -> f64,
) -> MicrogridCase {
    use Quantity::*;
    let mut out = case.clone();
    let vv = |c: &mut VoltVarCurve| {
        c.q_gen_max = f(Power, c.q_gen_max);
        c.q_abs_max = f(Power, c.q_abs_max);
        c.u_gen_start = f(Voltage, c.u_gen_start);
        c.u_abs_start = f(Voltage, c.u_abs_start);
        c.d_gen = f(PowerPerVoltage, c.d_gen);
        c.d_abs = f(PowerPerVoltage, c.d_abs);
    };

    out.system.u_nominal = f(Voltage, out.system.u_nominal);
    for bus in &mut out.buses {
        bus.u_min = f(Voltage, bus.u_min);
        bus.u_max = f(Voltage, bus.u_max);
    }
    for br in &mut out.branches {
        br.r = f(Impedance, br.r);
        br.x = f(Impedance, br.x);
        br.p_min = f(Power, br.p_min);
        br.p_max = f(Power, br.p_max);
        br.q_min = f(Power, br.q_min);
        br.q_max = f(Power, br.q_max);
    }
    for h in &mut out.hydrogen_sources {
        h.p_ely_max = f(Power, h.p_ely_max);
        h.p_fc_max = f(Power, h.p_fc_max);
        h.d_ely = f(PowerPerHz, h.d_ely);
        h.d_fc = f(PowerPerHz, h.d_fc);
        h.h_max = f(Energy, h.h_max);
        h.h_init = f(Energy, h.h_init);
        vv(&mut h.volt_var);
    }
    for r in &mut out.renewables {
        r.d_droop = f(PowerPerHz, r.d_droop);
        vv(&mut r.volt_var);
    }
    out
}

/// Divide every quantity of `case` by its base.
///
/// Powers, energies (power·h) and frequency droop slopes scale with `s_base`,
/// voltages with `u_base`, impedances with `u_base² / s_base`, volt-var
/// slopes with `s_base / u_base`. Frequencies are not touched. With both bases
/// equal to one the case is returned unchanged. The bases recorded in
/// `case.system` are left as they are.
pub fn per_unit_normalize(case: &MicrogridCase, s_base: f64, u_base: f64) -> Result<MicrogridCase> {
    for base in [s_base, u_base] {
        if !(base > 0.0 && base.is_finite()) {
            return Err(Error::InvalidBase(base));
        }
    }
    let z_base = u_base * u_base / s_base;
    Ok(map_quantities(case, |q, v| match q {
        Quantity::Power | Quantity::Energy | Quantity::PowerPerHz => v / s_base,
        Quantity::Voltage => v / u_base,
        Quantity::Impedance => v / z_base,
        Quantity::PowerPerVoltage => v * u_base / s_base,
    }))
}
