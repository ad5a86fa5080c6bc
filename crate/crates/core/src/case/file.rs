//! JSON case files.
//!
//! ```json
//! {
//!   "units": { "power": "kW", "voltage": "kV", "impedance": "ohm", "energy": "kWh" },
//!   "system": { "f_nominal": 60, "f_min": 59.5, "f_max": 60.5, "u_nominal": 4.16,
//!               "s_base_va": 1e6, "u_base_v": 4160 },
//!   "horizon": { "periods": 24, "step_hours": 0.25 },
//!   "buses": [...], "branches": [...], "hydrogen_sources": [...],
//!   "renewables": [...], "loads": [...]
//! }
//! ```
//!
//! Reactive powers use the power unit. Frequency droop slopes are power per
//! Hz, volt-var slopes power per voltage unit. Bases are always SI. A file
//! whose units are all `pu` is taken as already normalized.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::per_unit::{map_quantities, per_unit_normalize, Quantity};
use super::{validate_case, MicrogridCase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PowerUnit {
    W,
    #[serde(rename = "kW")]
    KW,
    MW,
    #[serde(rename = "pu")]
    PerUnit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VoltageUnit {
    V,
    #[serde(rename = "kV")]
    KV,
    #[serde(rename = "pu")]
    PerUnit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ImpedanceUnit {
    #[serde(rename = "ohm")]
    Ohm,
    #[serde(rename = "pu")]
    PerUnit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnergyUnit {
    Wh,
    #[serde(rename = "kWh")]
    KWh,
    MWh,
    #[serde(rename = "pu")]
    PerUnit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Units {
    pub power: PowerUnit,
    pub voltage: VoltageUnit,
    pub impedance: ImpedanceUnit,
    pub energy: EnergyUnit,
}

impl Units {
    pub fn per_unit() -> Self {
        Units {
            power: PowerUnit::PerUnit,
            voltage: VoltageUnit::PerUnit,
            impedance: ImpedanceUnit::PerUnit,
            energy: EnergyUnit::PerUnit,
        }
    }

    /// `Some(true)` when every unit is `pu`, `Some(false)` when none is,
    /// `None` for a mix.
    fn all_per_unit(&self) -> Option<bool> {
        let flags = [
            self.power == PowerUnit::PerUnit,
            self.voltage == VoltageUnit::PerUnit,
            self.impedance == ImpedanceUnit::PerUnit,
            self.energy == EnergyUnit::PerUnit,
        ];
        if flags.iter().all(|&f| f) {
            Some(true)
        } else if flags.iter().all(|&f| !f) {
            Some(false)
        } else {
            None
        }
    }

    fn power_si(&self) -> f64 {
        match self.power {
            PowerUnit::W | PowerUnit::PerUnit => 1.0,
            PowerUnit::KW => 1e3,
            PowerUnit::MW => 1e6,
        }
    }

    fn voltage_si(&self) -> f64 {
        match self.voltage {
            VoltageUnit::V | VoltageUnit::PerUnit => 1.0,
            VoltageUnit::KV => 1e3,
        }
    }

    fn energy_si(&self) -> f64 {
        match self.energy {
            EnergyUnit::Wh | EnergyUnit::PerUnit => 1.0,
            EnergyUnit::KWh => 1e3,
            EnergyUnit::MWh => 1e6,
        }
    }
}

/// On-disk layout: a [`MicrogridCase`] plus its units block.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaseFile {
    pub units: Units,
    #[serde(flatten)]
    pub case: MicrogridCase,
}

impl CaseFile {
    /// Convert to a per-unit case without validating it.
    pub fn into_per_unit(self) -> Result<MicrogridCase> {
        match self.units.all_per_unit() {
            Some(true) => Ok(self.case),
            Some(false) => {
                let u = self.units;
                let si = map_quantities(&self.case, |q, v| match q {
                    Quantity::Power => v * u.power_si(),
                    Quantity::Energy => v * u.energy_si(),
                    Quantity::Voltage => v * u.voltage_si(),
                    Quantity::Impedance => v,
                    Quantity::PowerPerHz => v * u.power_si(),
                    Quantity::PowerPerVoltage => v * u.power_si() / u.voltage_si(),
                });
                let (s, v) = (si.system.s_base_va, si.system.u_base_v);
                per_unit_normalize(&si, s, v)
            }
            None => Err(Error::Model(
                "units block mixes `pu` with physical units".into(),
            )),
        }
    }
}

/// Parse a case file and normalize it, without validation.
pub fn read_case_file(path: impl AsRef<Path>) -> Result<MicrogridCase> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: CaseFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })?;
    file.into_per_unit().map_err(|e| match e {
        Error::Model(message) => Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message,
        },
        other => other,
    })
}

/// Parse, normalize and validate a case file.
pub fn load_case_file(path: impl AsRef<Path>) -> Result<MicrogridCase> {
    let case = read_case_file(path)?;
    let report = validate_case(&case);
    if report.is_empty() {
        Ok(case)
    } else {
        Err(Error::Validation(report))
    }
}

/// Write a per-unit case; reading it back yields the same case.
pub fn save_case_file(case: &MicrogridCase, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = CaseFile {
        units: Units::per_unit(),
        case: case.clone(),
    };
    let text = serde_json::to_string_pretty(&file)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}
