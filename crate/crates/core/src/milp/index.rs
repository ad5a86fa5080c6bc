use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::VarId;

/// Piecewise characteristic a segment indicator belongs to. The payload is
/// the device position in the case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CurveRef {
    Electrolyzer(usize),
    FuelCell(usize),
    HydrogenVoltVar(usize),
    RenewableDroop(usize),
    RenewableVoltVar(usize),
}

/// Role and subscripts of a model variable.
///
/// Load pickup, hydrogen modes and constant-PQ setpoints carry no scenario
/// subscript: they are decided once and shared by every scenario.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VarKey {
    LoadPickup { load: usize, t: usize },
    ElectrolyzerOn { h: usize, t: usize },
    FuelCellOn { h: usize, t: usize },
    PowerSetpoint { r: usize, t: usize },
    Frequency { s: usize, t: usize },
    Voltage { s: usize, bus: usize, t: usize },
    FlowP { s: usize, branch: usize, t: usize },
    FlowQ { s: usize, branch: usize, t: usize },
    /// Electrolyzer power on its droop curve, drawn only when the mode is on.
    ElectrolyzerPower { s: usize, h: usize, t: usize },
    FuelCellPower { s: usize, h: usize, t: usize },
    /// Mode flag times curve power.
    ElectrolyzerDraw { s: usize, h: usize, t: usize },
    FuelCellOutput { s: usize, h: usize, t: usize },
    HydrogenP { s: usize, h: usize, t: usize },
    HydrogenQ { s: usize, h: usize, t: usize },
    TankLevel { s: usize, h: usize, t: usize },
    RenewableP { s: usize, r: usize, t: usize },
    RenewableQ { s: usize, r: usize, t: usize },
    Segment { s: usize, t: usize, curve: CurveRef, k: usize },
    /// Selects which argument of `min(setpoint, mpp)` is active.
    MinSelector { s: usize, r: usize, t: usize },
    Named(String),
}

impl fmt::Display for VarKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Bijection between variable ids and keys.
#[derive(Debug, Clone, Default)]
pub struct VariableIndex {
    keys: Vec<VarKey>,
    ids: HashMap<VarKey, VarId>,
}

impl VariableIndex {
    pub(crate) fn insert(&mut self, key: VarKey, id: VarId) {
        assert_eq!(id, self.keys.len(), "ids are dense and assigned in order");
        if self.ids.insert(key.clone(), id).is_some() {
            panic!("duplicate variable key {key}");
        }
        self.keys.push(key);
    }

    pub fn get(&self, key: &VarKey) -> Option<VarId> {
        self.ids.get(key).copied()
    }

    pub fn key(&self, id: VarId) -> &VarKey {
        &self.keys[id]
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = &VarKey> {
        self.keys.iter()
    }

    /// Check the id ↔ key maps are mutually inverse.
    pub fn is_bijective(&self) -> bool {
        self.keys.len() == self.ids.len()
            && self
                .keys
                .iter()
                .enumerate()
                .all(|(id, k)| self.ids.get(k) == Some(&id))
    }
}
