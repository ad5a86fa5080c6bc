use std::fmt;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::case::{ControlMode, MicrogridCase};
use crate::error::{Error, Result};
use crate::milp::{build_model, extract_plan, BuildOptions, OperationPlan};
use crate::scenario::ScenarioSet;
use crate::solver::Backend;

use super::expost::{droop_equilibrium, ExPostSummary};
use super::metrics::{compute_resilience_report, ResilienceReport};

/// Fills of the hydrogen sweep, labelled A to E.
pub const HYDROGEN_FILLS: [(&str, f64); 5] = [("A", 0.0), ("B", 0.25), ("C", 0.5), ("D", 0.75), ("E", 1.0)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Hydrogen,
    Gridforming,
    Baseline,
}

impl fmt::Display for SweepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepKind::Hydrogen => "hydrogen",
            SweepKind::Gridforming => "gridforming",
            SweepKind::Baseline => "baseline",
        })
    }
}

/// Outcome of one build-solve-report cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRun {
    pub label: String,
    /// Solver status, or `error` when building or decoding failed.
    pub status: String,
    pub options: BuildOptions,
    pub num_vars: usize,
    pub num_binaries: usize,
    pub num_constraints: usize,
    /// SHA-256 of the scenario set the model was built from.
    pub scenario_digest: String,
    pub plan: Option<OperationPlan>,
    /// Plan replayed under droop control (baseline runs only).
    pub realized: Option<OperationPlan>,
    pub expost: Option<ExPostSummary>,
    /// Indexes of the realized operation: the plan itself for droop-coupled
    /// runs, the replay otherwise.
    pub report: Option<ResilienceReport>,
    pub message: String,
    /// Seconds spent building and solving; not written to sweep tables.
    #[serde(skip)]
    pub wall_time: f64,
}

impl CaseRun {
    pub fn succeeded(&self) -> bool {
        self.report.is_some()
    }

    pub fn objective(&self) -> Option<f64> {
        self.report.as_ref().map(|r| r.objective)
    }
}

pub(crate) fn scenario_digest(scen: &ScenarioSet) -> String {
    let bytes = serde_json::to_vec(scen).expect("scenario set serializes");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Build, solve, decode and report one case.
pub fn run_case(label: &str, case: &MicrogridCase, scen: &ScenarioSet, options: BuildOptions, backend: &Backend) -> CaseRun {
    let start = Instant::now();
    let mut run = CaseRun {
        label: label.into(),
        status: "error".into(),
        options,
        num_vars: 0,
        num_binaries: 0,
        num_constraints: 0,
        scenario_digest: scenario_digest(scen),
        plan: None,
        realized: None,
        expost: None,
        report: None,
        message: String::new(),
        wall_time: 0.0,
    };
    let model = match build_model(case, scen, options) {
        Ok(m) => m,
        Err(e) => {
            run.message = e.to_string();
            return run;
        }
    };
    run.num_vars = model.num_vars();
    run.num_binaries = model.num_binaries();
    run.num_constraints = model.constraints.len();
    let sol = match backend.solve(&model) {
        Ok(s) => s,
        Err(e) => {
            run.message = e.to_string();
            run.wall_time = start.elapsed().as_secs_f64();
            return run;
        }
    };
    run.wall_time = start.elapsed().as_secs_f64();
    run.status = sol.status.to_string();
    if !sol.status.has_solution() {
        run.message = sol.message.trim().to_string();
        return run;
    }
    let plan = match extract_plan(&model, &sol) {
        Ok(p) => p,
        Err(e) => {
            run.status = "error".into();
            run.message = e.to_string();
            return run;
        }
    };
    if options.droop_coupling {
        run.report = Some(compute_resilience_report(&plan, case, scen));
    } else {
        let (realized, summary) = droop_equilibrium(&plan, case);
        run.report = Some(compute_resilience_report(&realized, case, scen));
        run.realized = Some(realized);
        run.expost = Some(summary);
    }
    run.plan = Some(plan);
    run
}

/// Reports of one experiment, ordered by case label as listed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub kind: SweepKind,
    pub cases: Vec<CaseRun>,
    /// Observed trends and deviations from the expected direction.
    pub diagnostics: Vec<String>,
}

impl Sweep {
    pub fn any_failed(&self) -> bool {
        self.cases.iter().any(|c| !c.succeeded())
    }

    pub fn case(&self, label: &str) -> Option<&CaseRun> {
        self.cases.iter().find(|c| c.label == label)
    }

    /// One row per case with the scalar indexes and the run status.
    pub fn write_sweep_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
        for c in &self.cases {
            w.serialize(SweepRow::from(c))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

fn csv_io(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Solver(format!("{}: {other:?}", path.display())),
    }
}

#[derive(Serialize)]
struct SweepRow<'a> {
    case: &'a str,
    status: &'a str,
    objective: Option<f64>,
    lsr_all: Option<f64>,
    lsr_critical: Option<f64>,
    lsr_noncritical: Option<f64>,
    renewable_consumption_ratio: Option<f64>,
    avg_frequency_variation_hz: Option<f64>,
    max_frequency_variation_hz: Option<f64>,
    avg_voltage_variation_pu: Option<f64>,
    max_voltage_variation_pu: Option<f64>,
    avg_voltage_variation_v: Option<f64>,
    max_voltage_variation_v: Option<f64>,
    max_power_step: Option<f64>,
    /// Weighted mean over scenarios of the total final tank level.
    final_hydrogen: Option<f64>,
    message: String,
}

impl<'a> From<&'a CaseRun> for SweepRow<'a> {
    fn from(c: &'a CaseRun) -> Self {
        let r = c.report.as_ref();
        let final_hydrogen = c.plan.as_ref().and_then(|_| {
            let p = c.realized.as_ref().or(c.plan.as_ref())?;
            if p.scenarios.first().is_none_or(|s| s.tank.is_empty()) {
                return None;
            }
            Some(
                p.scenarios
                    .iter()
                    .map(|s| s.weight * s.tank.iter().filter_map(|h| h.last()).sum::<f64>())
                    .sum(),
            )
        });
        SweepRow {
            case: &c.label,
            status: &c.status,
            objective: r.map(|r| r.objective),
            lsr_all: r.map(|r| r.lsr_all),
            lsr_critical: r.map(|r| r.lsr_critical),
            lsr_noncritical: r.map(|r| r.lsr_noncritical),
            renewable_consumption_ratio: r.map(|r| r.renewable_consumption_ratio),
            avg_frequency_variation_hz: r.map(|r| r.avg_frequency_variation_hz),
            max_frequency_variation_hz: r.map(|r| r.max_frequency_variation_hz),
            avg_voltage_variation_pu: r.map(|r| r.avg_voltage_variation_pu),
            max_voltage_variation_pu: r.map(|r| r.max_voltage_variation_pu),
            avg_voltage_variation_v: r.map(|r| r.avg_voltage_variation_v),
            max_voltage_variation_v: r.map(|r| r.max_voltage_variation_v),
            max_power_step: r.map(|r| r.max_power_step()),
            final_hydrogen,
            message: c.message.lines().next().unwrap_or("").to_string(),
        }
    }
}

/// Long-format table `case,metric,value` of every scalar index.
pub fn write_report_csv<'a>(rows: impl IntoIterator<Item = (&'a str, &'a ResilienceReport)>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
    w.write_record(["case", "metric", "value"])?;
    for (label, report) in rows {
        for (metric, value) in report.scalar_metrics() {
            w.write_record([label, metric.as_str(), &value.to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn run_all(jobs: usize, items: Vec<(String, MicrogridCase, BuildOptions)>, scen: &ScenarioSet, backend: &Backend) -> Result<Vec<CaseRun>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Solver(format!("worker pool: {e}")))?;
    Ok(pool.install(|| {
        items
            .par_iter()
            .map(|(label, case, opts)| run_case(label, case, scen, *opts, backend))
            .collect()
    }))
}

fn rel_tol(a: f64) -> f64 {
    1e-6 * a.abs().max(1.0)
}

/// Case O without the hydrogen source, then cases A to E with the tank
/// filled to 0, 25, 50, 75 and 100 %. `jobs = 0` uses all cores.
pub fn run_hydrogen_sweep(case: &MicrogridCase, scen: &ScenarioSet, backend: &Backend, jobs: usize) -> Result<Sweep> {
    if case.hydrogen_sources.len() != 1 {
        return Err(Error::Model(format!(
            "hydrogen sweep needs exactly one hydrogen source, case has {}",
            case.hydrogen_sources.len()
        )));
    }
    let opts = BuildOptions::default();
    let mut items = vec![("O".to_string(), case.without_hydrogen(), opts)];
    for (label, fill) in HYDROGEN_FILLS {
        items.push((label.to_string(), case.with_fill(fill), opts));
    }
    let cases = run_all(jobs, items, scen, backend)?;

    let mut diagnostics = Vec::new();
    let obj = |l: &str| cases.iter().find(|c| c.label == l).and_then(CaseRun::objective);
    for w in HYDROGEN_FILLS.windows(2) {
        if let (Some(a), Some(b)) = (obj(w[0].0), obj(w[1].0)) {
            if b < a - rel_tol(a) {
                diagnostics.push(format!("objective decreases from {} ({a}) to {} ({b})", w[0].0, w[1].0));
            }
        }
    }
    if let Some(o) = obj("O") {
        for (label, _) in HYDROGEN_FILLS {
            if let Some(v) = obj(label) {
                if v <= o {
                    diagnostics.push(format!("case {label} ({v}) does not improve on case O ({o})"));
                }
            }
        }
    }
    if let (Some(a), Some(b), Some(d), Some(e)) = (obj("A"), obj("B"), obj("D"), obj("E")) {
        diagnostics.push(format!(
            "marginal gain of the first 25 % fill {}, of the last 25 % fill {}",
            b - a,
            e - d
        ));
    }
    Ok(Sweep {
        kind: SweepKind::Hydrogen,
        cases,
        diagnostics,
    })
}

/// Cases I (all renewables constant-PQ), II (first renewable in droop) and
/// III (all renewables in droop); hydrogen stays in droop throughout.
pub fn run_gridforming_sweep(case: &MicrogridCase, scen: &ScenarioSet, backend: &Backend, jobs: usize) -> Result<Sweep> {
    let n = case.renewables.len();
    if n < 2 {
        return Err(Error::Model(format!("grid-forming sweep needs two renewables, case has {n}")));
    }
    let modes = |droop: usize| -> Vec<ControlMode> {
        (0..n)
            .map(|r| if r < droop { ControlMode::Droop } else { ControlMode::ConstantPq })
            .collect()
    };
    let opts = BuildOptions::default();
    let items = vec![
        ("I".to_string(), case.with_control_modes(&modes(0)), opts),
        ("II".to_string(), case.with_control_modes(&modes(1)), opts),
        ("III".to_string(), case.with_control_modes(&modes(n)), opts),
    ];
    let cases = run_all(jobs, items, scen, backend)?;

    let mut diagnostics = Vec::new();
    let rep = |l: &str| cases.iter().find(|c| c.label == l).and_then(|c| c.report.as_ref());
    if let (Some(one), Some(three)) = (rep("I"), rep("III")) {
        let gain = |a: f64, b: f64| if a != 0.0 { format!("{:.2} %", 100.0 * (b - a) / a.abs()) } else { "n/a".into() };
        diagnostics.push(format!(
            "objective I -> III: {} -> {} ({})",
            one.objective,
            three.objective,
            gain(one.objective, three.objective)
        ));
        diagnostics.push(format!(
            "critical LSR I -> III: {} -> {} ({})",
            one.lsr_critical,
            three.lsr_critical,
            gain(one.lsr_critical, three.lsr_critical)
        ));
        if three.objective < one.objective - rel_tol(one.objective) {
            diagnostics.push("objective of case III is below case I".into());
        }
        if three.lsr_critical < one.lsr_critical - 1e-9 {
            diagnostics.push("critical LSR of case III is below case I".into());
        }
    }
    Ok(Sweep {
        kind: SweepKind::Gridforming,
        cases,
        diagnostics,
    })
}

/// The droop-coupled dispatch next to a dispatch that ignores droop
/// coupling, the latter replayed under droop control.
pub fn run_baseline_comparison(case: &MicrogridCase, scen: &ScenarioSet, backend: &Backend, jobs: usize) -> Result<Sweep> {
    let items = vec![
        ("proposed".to_string(), case.clone(), BuildOptions { droop_coupling: true }),
        ("baseline".to_string(), case.clone(), BuildOptions { droop_coupling: false }),
    ];
    let cases = run_all(jobs, items, scen, backend)?;
    let mut diagnostics = Vec::new();
    let rep = |l: &str| cases.iter().find(|c| c.label == l).and_then(|c| c.report.as_ref());
    if let (Some(p), Some(b)) = (rep("proposed"), rep("baseline")) {
        diagnostics.push(format!(
            "max frequency deviation: proposed {} Hz, baseline realized {} Hz",
            p.max_frequency_variation_hz, b.max_frequency_variation_hz
        ));
        diagnostics.push(format!(
            "max voltage deviation: proposed {} p.u., baseline realized {} p.u.",
            p.max_voltage_variation_pu, b.max_voltage_variation_pu
        ));
        diagnostics.push(format!(
            "LSR all {} vs {}, critical {} vs {}",
            p.lsr_all, b.lsr_all, p.lsr_critical, b.lsr_critical
        ));
    }
    if let Some(s) = cases.iter().find(|c| c.label == "baseline").and_then(|c| c.expost.as_ref()) {
        diagnostics.push(format!(
            "baseline replay: {} frequency clamps, {} voltage clamps, {} voltage violations, {} flow violations, {} tank violations",
            s.frequency_clamped, s.voltage_clamped, s.voltage_violations, s.flow_violations, s.tank_violations
        ));
    }
    Ok(Sweep {
        kind: SweepKind::Baseline,
        cases,
        diagnostics,
    })
}
