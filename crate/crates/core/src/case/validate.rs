use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ControlMode, MicrogridCase, VoltVarCurve};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub code: String,
    pub message: String,
    pub path: String,
}

/// Violated invariants of a case. Serializes as a JSON array of issues;
/// warnings do not make a case unusable and are kept apart.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
    pub warnings: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }

    fn push(&mut self, code: &str, path: impl Into<String>, message: impl Into<String>) {
        self.issues.push(ValidationIssue {
            code: code.into(),
            message: message.into(),
            path: path.into(),
        });
    }

    fn warn(&mut self, code: &str, path: impl Into<String>, message: impl Into<String>) {
        self.warnings.push(ValidationIssue {
            code: code.into(),
            message: message.into(),
            path: path.into(),
        });
    }

    pub fn has_code(&self, code: &str) -> bool {
        self.issues.iter().any(|i| i.code == code)
    }
}

impl Serialize for ValidationReport {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.issues.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ValidationReport {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(ValidationReport {
            issues: Vec::deserialize(d)?,
            warnings: Vec::new(),
        })
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in &self.issues {
            writeln!(f, "  [{}] {}: {}", i.code, i.path, i.message)?;
        }
        Ok(())
    }
}

/// Check every invariant of `case`. An empty report means the case can be
/// handed to the model builder.
pub fn validate_case(case: &MicrogridCase) -> ValidationReport {
    let mut rep = ValidationReport::default();
    check_finite(case, &mut rep);
    let sys = &case.system;

    if case.horizon.periods < 1 {
        rep.push("horizon", "horizon.periods", "horizon needs at least one period");
    }
    if !(case.horizon.step_hours > 0.0) {
        rep.push("horizon", "horizon.step_hours", "step length must be positive");
    }
    if !(sys.f_min < sys.f_nominal && sys.f_nominal < sys.f_max) {
        rep.push(
            "frequency_band",
            "system",
            "frequency bounds must satisfy f_min < f_nominal < f_max",
        );
    }
    if !(sys.u_nominal > 0.0) {
        rep.push("voltage_bounds", "system.u_nominal", "nominal voltage must be positive");
    }
    if !(sys.s_base_va > 0.0 && sys.u_base_v > 0.0) {
        rep.push("base", "system", "per-unit bases must be positive");
    }

    let mut bus_ids = HashSet::new();
    for (k, bus) in case.buses.iter().enumerate() {
        let path = format!("buses[{k}]");
        if !bus_ids.insert(bus.id.as_str()) {
            rep.push("duplicate_id", &path, format!("duplicate bus id {:?}", bus.id));
        }
        if !(0.0 < bus.u_min && bus.u_min < bus.u_max) {
            rep.push("voltage_bounds", &path, "voltage bounds must satisfy 0 < u_min < u_max");
        }
    }
    if case.buses.is_empty() {
        rep.push("empty_network", "buses", "case has no buses");
    }

    let known = |rep: &mut ValidationReport, id: &str, path: &str| {
        if !bus_ids.contains(id) {
            rep.push("unknown_bus", path, format!("reference to unknown bus {id:?}"));
            false
        } else {
            true
        }
    };

    let mut tree_ok = true;
    for (k, br) in case.branches.iter().enumerate() {
        let path = format!("branches[{k}]");
        if br.from == br.to {
            rep.push("self_loop", &path, format!("self-loop branch at bus {:?}", br.from));
            tree_ok = false;
        }
        tree_ok &= known(&mut rep, &br.from, &path);
        tree_ok &= known(&mut rep, &br.to, &path);
        if br.p_min > br.p_max || br.q_min > br.q_max {
            rep.push("flow_bounds", &path, "flow bounds must satisfy min <= max");
        }
        if br.r < 0.0 || br.x < 0.0 {
            rep.push("impedance", &path, "branch impedance must be non-negative");
        }
    }
    if tree_ok && !case.buses.is_empty() && !is_connected_tree(case) {
        rep.push("not_a_tree", "branches", "network not a connected tree");
    }

    let mut device_ids = HashSet::new();
    let mut check_id = |rep: &mut ValidationReport, id: &str, path: &str| {
        if !device_ids.insert(id.to_string()) {
            rep.push("duplicate_id", path, format!("duplicate device or load id {id:?}"));
        }
    };

    for (k, h) in case.hydrogen_sources.iter().enumerate() {
        let path = format!("hydrogen_sources[{k}]");
        check_id(&mut rep, &h.id, &path);
        known(&mut rep, &h.bus, &path);
        if !(h.f_fc_knee < h.f_ely_knee) {
            rep.push(
                "knee_order",
                &path,
                "fuel-cell knee must lie below the electrolyzer knee",
            );
        }
        if h.h_init > h.h_max {
            rep.push("tank_overfull", &path, "tank overfull: h_init exceeds h_max");
        }
        if h.h_init < 0.0 {
            rep.push("tank_negative", &path, "initial tank energy is negative");
        }
        for (name, v) in [
            ("p_ely_max", h.p_ely_max),
            ("p_fc_max", h.p_fc_max),
            ("d_ely", h.d_ely),
            ("d_fc", h.d_fc),
            ("h_max", h.h_max),
        ] {
            if !(v > 0.0) {
                rep.push("non_positive", format!("{path}.{name}"), format!("{name} must be positive"));
            }
        }
        for (name, v) in [("eta_ely", h.eta_ely), ("eta_fc", h.eta_fc)] {
            if !(v > 0.0 && v <= 1.0) {
                rep.push("efficiency", format!("{path}.{name}"), format!("{name} must lie in (0, 1]"));
            }
        }
        check_volt_var(&mut rep, &h.volt_var, &format!("{path}.volt_var"));
        for (name, knee) in [("f_ely_knee", h.f_ely_knee), ("f_fc_knee", h.f_fc_knee)] {
            if knee < sys.f_min || knee > sys.f_max {
                rep.warn(
                    "knee_outside_band",
                    format!("{path}.{name}"),
                    format!("{name} lies outside the frequency security band"),
                );
            }
        }
    }

    for (k, r) in case.renewables.iter().enumerate() {
        let path = format!("renewables[{k}]");
        check_id(&mut rep, &r.id, &path);
        known(&mut rep, &r.bus, &path);
        if r.control_mode == ControlMode::Droop && !(r.d_droop > 0.0) {
            rep.push("non_positive", format!("{path}.d_droop"), "droop slope must be positive in droop mode");
        }
        check_volt_var(&mut rep, &r.volt_var, &format!("{path}.volt_var"));
        if r.f_knee < sys.f_min || r.f_knee > sys.f_max {
            rep.warn(
                "knee_outside_band",
                format!("{path}.f_knee"),
                "f_knee lies outside the frequency security band",
            );
        }
    }

    let mut load_buses = HashSet::new();
    for (k, l) in case.loads.iter().enumerate() {
        let path = format!("loads[{k}]");
        check_id(&mut rep, &l.id, &path);
        known(&mut rep, &l.bus, &path);
        if !load_buses.insert(l.bus.as_str()) {
            rep.push("duplicate_load", &path, format!("more than one load at bus {:?}", l.bus));
        }
        if !(l.weight > 0.0 && l.weight < 1.0) {
            rep.push("load_weight", &path, "load weight must lie in (0, 1)");
        }
        if !(l.power_factor > 0.0 && l.power_factor <= 1.0) {
            rep.push("power_factor", &path, "power factor must lie in (0, 1]");
        }
    }

    rep
}

fn check_volt_var(rep: &mut ValidationReport, c: &VoltVarCurve, path: &str) {
    if !(c.u_gen_start < c.u_abs_start) {
        rep.push("dead_band", path, "dead band must satisfy u_gen_start < u_abs_start");
    }
    if [c.q_gen_max, c.q_abs_max, c.d_gen, c.d_abs].iter().any(|&v| v < 0.0) {
        rep.push("volt_var", path, "reactive limits and slopes must be non-negative");
    }
}

fn check_finite(case: &MicrogridCase, rep: &mut ValidationReport) {
    let v = serde_json::to_value(case).expect("case serializes");
    let mut bad = Vec::new();
    walk_numbers(&v, String::new(), &mut bad);
    for path in bad {
        rep.push("non_finite", path, "value is not a finite number");
    }
}

// serde_json writes NaN/inf as null, so nulls in numeric slots mark non-finite values.
fn walk_numbers(v: &serde_json::Value, path: String, bad: &mut Vec<String>) {
    match v {
        serde_json::Value::Null => bad.push(path),
        serde_json::Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                walk_numbers(x, format!("{path}[{i}]"), bad);
            }
        }
        serde_json::Value::Object(m) => {
            for (k, x) in m {
                let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                walk_numbers(x, p, bad);
            }
        }
        _ => {}
    }
}

/// Union-find check that the branches form a spanning tree over the buses.
fn is_connected_tree(case: &MicrogridCase) -> bool {
    let n = case.buses.len();
    if case.branches.len() != n - 1 {
        return false;
    }
    let index: HashMap<&str, usize> = case
        .buses
        .iter()
        .enumerate()
        .map(|(i, b)| (b.id.as_str(), i))
        .collect();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for br in &case.branches {
        let (a, b) = (index[br.from.as_str()], index[br.to.as_str()]);
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra == rb {
            return false;
        }
        parent[ra] = rb;
    }
    true
}
