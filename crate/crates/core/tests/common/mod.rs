#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Duration;

use h2grid::case::{load_case_file, ControlMode, HydrogenSource, MicrogridCase, RenewableSource, VoltVarCurve};
use h2grid::milp::{compute_big_m, linearize_piecewise_affine, BuildOptions, MilpModel, PiecewiseCurve, Sense, Tag, VarKey};
use h2grid::response::{electrolyzer_power, fuelcell_power, renewable_power, voltvar_reactive_power};
use h2grid::scenario::{build_scenario_set, load_forecast_csv, sample_error_scenarios, Profile, ScenarioSet};
use h2grid::solver::{solve_enumeration, Backend, ExternalSolverConfig, SOLVER_CMD_ENV};
use h2grid::toy;

pub fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

/// The 13-bus case and its three-scenario set (100 samples, seed 42).
pub fn fixture_case() -> (MicrogridCase, ScenarioSet) {
    let case = load_case_file(fixture("ieee13.json")).unwrap();
    let fc = load_forecast_csv(fixture("ieee13_forecast.csv"), &case).unwrap();
    let scen = build_scenario_set(&fc, &sample_error_scenarios(&fc, 100, 42)).unwrap();
    (case, scen)
}

/// `$H2GRID_SOLVER_CMD`, else the bundled HiGHS wrapper.
pub fn solver_command() -> String {
    match std::env::var(SOLVER_CMD_ENV) {
        Ok(c) if !c.trim().is_empty() => c,
        _ => format!(
            "python3 '{}' {{lp}} {{sol}}",
            repo_root().join("tools/highs_solve.py").display()
        ),
    }
}

/// Whether the default wrapper can run (python3 with highspy or scipy).
pub fn solver_available() -> bool {
    if std::env::var(SOLVER_CMD_ENV).is_ok_and(|c| !c.trim().is_empty()) {
        return true;
    }
    let probe = "import importlib.util as u, sys; sys.exit(0 if u.find_spec('highspy') or u.find_spec('scipy') else 1)";
    Command::new("python3")
        .args(["-c", probe])
        .status()
        .is_ok_and(|s| s.success())
}

pub fn external(time_limit_s: u64) -> Backend {
    Backend::External(ExternalSolverConfig {
        time_limit: Duration::from_secs(time_limit_s),
        ..ExternalSolverConfig::new(solver_command())
    })
}

/// One random curve with a fixed input, drawn from unit-interval parameters.
#[derive(Debug, Clone)]
pub struct Draw {
    pub kind: u8,
    pub curve: PiecewiseCurve,
    pub input: (f64, f64),
    pub output: (f64, f64),
    pub x0: f64,
    pub expected: f64,
}

fn lerp(a: f64, b: f64, u: f64) -> f64 {
    a + (b - a) * u
}

impl Draw {
    /// `kind` 0 electrolyzer, 1 fuel cell, 2 renewable droop, 3 volt-var.
    /// Some draws land the input exactly on a knee.
    pub fn from_unit(kind: u8, u: [f64; 6]) -> Draw {
        let band = (59.5, 60.5);
        let pick = |knee: f64, lo: f64, hi: f64| {
            if u[4] < 0.15 && knee >= lo && knee <= hi {
                knee
            } else {
                lerp(lo, hi, u[3])
            }
        };
        match kind % 4 {
            0 => {
                let mut h = toy::hydrogen("1");
                h.p_ely_max = lerp(0.05, 1.0, u[0]);
                h.f_ely_knee = lerp(59.4, 60.6, u[1]);
                h.d_ely = h.p_ely_max / lerp(0.05, 1.05, u[2]);
                let zero = h.f_ely_knee - h.p_ely_max / h.d_ely;
                let knee = if u[5] < 0.5 { h.f_ely_knee } else { zero };
                let x0 = pick(knee, band.0, band.1);
                Draw {
                    kind: 0,
                    curve: PiecewiseCurve::electrolyzer(&h),
                    input: band,
                    output: (0.0, h.p_ely_max),
                    x0,
                    expected: electrolyzer_power(x0, &h),
                }
            }
            1 => {
                let mut h: HydrogenSource = toy::hydrogen("1");
                h.p_fc_max = lerp(0.05, 1.0, u[0]);
                h.f_fc_knee = lerp(59.4, 60.6, u[1]);
                h.d_fc = h.p_fc_max / lerp(0.05, 1.05, u[2]);
                let zero = h.f_fc_knee + h.p_fc_max / h.d_fc;
                let knee = if u[5] < 0.5 { h.f_fc_knee } else { zero };
                let x0 = pick(knee, band.0, band.1);
                Draw {
                    kind: 1,
                    curve: PiecewiseCurve::fuel_cell(&h),
                    input: band,
                    output: (0.0, h.p_fc_max),
                    x0,
                    expected: fuelcell_power(x0, &h),
                }
            }
            2 => {
                let mut r: RenewableSource = toy::renewable("1", ControlMode::Droop);
                let mpp = if u[0] < 0.1 { 0.0 } else { lerp(0.0, 1.0, u[0]) };
                r.f_knee = lerp(59.6, 60.4, u[1]);
                r.d_droop = lerp(0.5, 4.0, u[2]);
                let zero = r.f_knee + mpp / r.d_droop;
                let knee = if u[5] < 0.5 { r.f_knee } else { zero };
                let x0 = pick(knee, band.0, band.1);
                Draw {
                    kind: 2,
                    curve: PiecewiseCurve::renewable(&r, mpp),
                    input: band,
                    output: (0.0, mpp),
                    x0,
                    expected: renewable_power(x0, mpp, &r),
                }
            }
            _ => {
                let c = VoltVarCurve {
                    q_gen_max: lerp(0.05, 0.5, u[0]),
                    q_abs_max: lerp(0.05, 0.5, u[5]),
                    u_gen_start: lerp(0.96, 0.99, u[1]),
                    u_abs_start: lerp(1.01, 1.04, u[2]),
                    d_gen: lerp(1.0, 25.0, u[2]),
                    d_abs: lerp(1.0, 25.0, u[1]),
                };
                let knee = if u[5] < 0.5 { c.u_gen_start } else { c.u_abs_start };
                let x0 = pick(knee, 0.9, 1.1);
                Draw {
                    kind: 3,
                    output: (-c.q_abs_max, c.q_gen_max),
                    curve: PiecewiseCurve::volt_var(&c),
                    input: (0.9, 1.1),
                    x0,
                    expected: voltvar_reactive_power(x0, &c),
                }
            }
        }
    }

    /// Smallest and largest output the encoded block admits at `x0`.
    pub fn feasible_output_range(&self) -> (f64, f64) {
        let mut m = MilpModel::new();
        let x = m.add_var(VarKey::Named("x".into()), self.input.0, self.input.1, false);
        let y = m.add_var(VarKey::Named("y".into()), self.output.0, self.output.1, false);
        m.add_constraint(&[(x, 1.0)], Sense::Eq, self.x0, Tag::Plumbing);
        let bm = compute_big_m(&self.curve, self.input, self.output).unwrap();
        linearize_piecewise_affine(&mut m, &self.curve, x, y, &bm, |k| VarKey::Named(format!("z{k}")), Tag::Plumbing)
            .unwrap();
        let mut extreme = |sign: f64| {
            m.set_objective(y, sign);
            let r = solve_enumeration(&m, 8).unwrap();
            assert!(r.status.has_solution(), "block infeasible at {self:?}");
            r.values.unwrap()[y]
        };
        let hi = extreme(1.0);
        let lo = extreme(-1.0);
        (lo, hi)
    }

    /// Worst deviation of the block's feasible outputs from the oracle.
    pub fn error(&self) -> f64 {
        let (lo, hi) = self.feasible_output_range();
        (lo - self.expected).abs().max((hi - self.expected).abs())
    }
}

/// Small instances (at most 20 binaries) covering hydrogen modes, droop and
/// constant-PQ renewables, several scenarios and the decoupled model.
pub fn micro_instances() -> Vec<(String, MicrogridCase, ScenarioSet, BuildOptions)> {
    let coupled = BuildOptions { droop_coupling: true };
    let decoupled = BuildOptions { droop_coupling: false };
    let mut out = Vec::new();

    for (h_init, load) in [(1.0, 0.5), (0.0, 0.5), (0.05, 0.55), (1.0, 0.3), (0.02, 0.2)] {
        let case = toy::single_bus_hydrogen_case(h_init);
        let scen = ScenarioSet::single(Profile {
            renewable_mpp: vec![],
            load_p: vec![vec![load]],
        });
        out.push((format!("hydrogen h0={h_init} load={load}"), case, scen, coupled));
    }

    for (mpp, loads) in [
        (vec![0.5, 0.2], [vec![0.1, 0.3], vec![0.3, 0.1]]),
        (vec![0.3, 0.55], [vec![0.25, 0.2], vec![0.1, 0.4]]),
        (vec![0.0, 0.4], [vec![0.2, 0.2], vec![0.2, 0.2]]),
    ] {
        let case = toy::two_bus_renewable_case(2, ControlMode::Droop);
        let scen = ScenarioSet::single(Profile {
            renewable_mpp: vec![mpp.clone()],
            load_p: loads.to_vec(),
        });
        out.push((format!("droop renewable mpp={mpp:?}"), case, scen, coupled));
    }

    let case = toy::two_bus_renewable_case(2, ControlMode::ConstantPq);
    let scen = ScenarioSet::new(
        vec!["low".into(), "high".into()],
        vec![0.3, 0.7],
        vec![
            Profile {
                renewable_mpp: vec![vec![0.3, 0.2]],
                load_p: vec![vec![0.1, 0.15], vec![0.25, 0.1]],
            },
            Profile {
                renewable_mpp: vec![vec![0.5, 0.45]],
                load_p: vec![vec![0.1, 0.15], vec![0.25, 0.1]],
            },
        ],
    )
    .unwrap();
    out.push(("constant-pq two scenarios".into(), case, scen, coupled));

    let mut case = toy::two_bus_case();
    case.hydrogen_sources[0].h_init = 0.1;
    let scen = ScenarioSet::new(
        vec!["a".into(), "b".into()],
        vec![0.5, 0.5],
        vec![
            Profile {
                renewable_mpp: vec![vec![0.2, 0.1]],
                load_p: vec![vec![0.5, 0.7]],
            },
            Profile {
                renewable_mpp: vec![vec![0.4, 0.0]],
                load_p: vec![vec![0.5, 0.7]],
            },
        ],
    )
    .unwrap();
    out.push(("decoupled two-bus".into(), case, scen, decoupled));

    let case = toy::two_bus_renewable_case(3, ControlMode::Droop);
    let scen = ScenarioSet::single(Profile {
        renewable_mpp: vec![vec![0.6, 0.1, 0.4]],
        load_p: vec![vec![0.2, 0.3, 0.1], vec![0.3, 0.1, 0.35]],
    });
    out.push(("decoupled renewable three periods".into(), case, scen, decoupled));
    out
}
