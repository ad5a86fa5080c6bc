//! Command-line front end.
//!
//! Exit codes: 0 success, 1 error, 2 infeasible model, 3 a sweep case
//! failed, 4 the case did not validate.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::analysis::{
    run_baseline_comparison, run_case, run_gridforming_sweep, run_hydrogen_sweep, write_report_csv, CaseRun,
    SweepKind,
};
use crate::case::{read_case_file, validate_case, MicrogridCase};
use crate::error::{Error, Result};
use crate::milp::{build_model, BuildOptions};
use crate::scenario::{build_scenario_set, load_forecast_csv, sample_error_scenarios, ScenarioSet};
use crate::solver::{write_lp_file, Backend, ExternalSolverConfig, SolveStatus, DEFAULT_BINARY_BUDGET, SOLVER_CMD_ENV};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_SWEEP_FAILED: i32 = 3;
pub const EXIT_INVALID: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "h2grid", version, about = "Resilient dispatch of islanded hydrogen microgrids")]
pub struct Cli {
    #[command(flatten)]
    pub config: RunConfig,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// Case file (JSON).
    #[arg(long, global = true, default_value = "fixtures/ieee13.json")]
    pub case: PathBuf,
    /// Forecast CSV, kW.
    #[arg(long, global = true, default_value = "fixtures/ieee13_forecast.csv")]
    pub forecast: PathBuf,
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Number of forecast-error samples the extreme scenarios are taken from.
    #[arg(long, global = true, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub samples: u64,
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Solver command template with {lp}, {sol}, {time_limit} and {gap}.
    /// Without one, models are solved by in-process enumeration, which only
    /// accepts tiny models.
    #[arg(long, global = true, env = SOLVER_CMD_ENV)]
    pub solver_cmd: Option<String>,
    /// Seconds per solve.
    #[arg(long, global = true, default_value_t = 600.0)]
    pub time_limit: f64,
    /// Relative MIP gap.
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub gap: f64,
    /// Parallel solves in sweeps; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one dispatch and write plan, report and model files.
    Solve {
        /// Dispatch without droop coupling, then replay it under droop control.
        #[arg(long)]
        baseline: bool,
    },
    /// Run one of the experiments.
    Sweep {
        #[arg(value_enum)]
        kind: SweepArg,
    },
    /// Check a case file and print every violated invariant.
    Validate,
    /// Sample forecast errors and write the three-scenario set.
    GenScenarios,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepArg {
    Hydrogen,
    Gridforming,
    Baseline,
}

impl From<SweepArg> for SweepKind {
    fn from(s: SweepArg) -> Self {
        match s {
            SweepArg::Hydrogen => SweepKind::Hydrogen,
            SweepArg::Gridforming => SweepKind::Gridforming,
            SweepArg::Baseline => SweepKind::Baseline,
        }
    }
}

impl RunConfig {
    pub fn backend(&self) -> Result<Backend> {
        if !(self.time_limit > 0.0) || !self.time_limit.is_finite() {
            return Err(Error::Solver(format!("time limit must be positive, got {}", self.time_limit)));
        }
        if !(self.gap >= 0.0) {
            return Err(Error::Solver(format!("gap must be non-negative, got {}", self.gap)));
        }
        Ok(match self.solver_cmd.as_deref().map(str::trim) {
            Some(cmd) if !cmd.is_empty() => Backend::External(ExternalSolverConfig {
                command: cmd.to_string(),
                time_limit: Duration::from_secs_f64(self.time_limit),
                mip_gap: self.gap,
            }),
            _ => Backend::Enumeration {
                budget: DEFAULT_BINARY_BUDGET,
            },
        })
    }

    fn scenarios(&self, case: &MicrogridCase) -> Result<ScenarioSet> {
        let fc = load_forecast_csv(&self.forecast, case)?;
        let samples = sample_error_scenarios(&fc, self.samples as usize, self.seed);
        build_scenario_set(&fc, &samples)
    }

    fn manifest(&self, command: &str, scen: Option<&ScenarioSet>) -> Result<serde_json::Value> {
        let mut inputs = serde_json::Map::new();
        for (name, path) in [("case", &self.case), ("forecast", &self.forecast)] {
            if name == "forecast" && scen.is_none() {
                continue;
            }
            inputs.insert(
                name.into(),
                json!({ "path": path.display().to_string(), "sha256": file_digest(path)? }),
            );
        }
        Ok(json!({
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "seed": self.seed,
            "samples": self.samples,
            "solver_cmd": self.solver_cmd,
            "time_limit": self.time_limit,
            "gap": self.gap,
            "inputs": inputs,
            "scenario_digest": scen.map(crate::analysis::scenario_digest),
        }))
    }
}

fn file_digest(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Parse `args` (program name first) and run; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    let cfg = &cli.config;
    let outcome = match cli.command {
        Command::Solve { baseline } => cmd_solve(cfg, baseline),
        Command::Sweep { kind } => cmd_sweep(cfg, kind.into()),
        Command::Validate => cmd_validate(cfg),
        Command::GenScenarios => cmd_gen_scenarios(cfg),
    };
    match outcome {
        Ok(code) => code,
        Err(Error::Validation(report)) => {
            eprintln!("error: {} is invalid:\n{report}", cfg.case.display());
            EXIT_INVALID
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn load_case(cfg: &RunConfig) -> Result<MicrogridCase> {
    let case = read_case_file(&cfg.case)?;
    let report = validate_case(&case);
    for w in &report.warnings {
        eprintln!("warning: [{}] {}: {}", w.code, w.path, w.message);
    }
    if report.is_empty() {
        Ok(case)
    } else {
        Err(Error::Validation(report))
    }
}

pub fn cmd_validate(cfg: &RunConfig) -> Result<i32> {
    let case = read_case_file(&cfg.case)?;
    let report = validate_case(&case);
    for w in &report.warnings {
        println!("warning: [{}] {}: {}", w.code, w.path, w.message);
    }
    if report.is_empty() {
        println!("{}: ok", cfg.case.display());
        Ok(EXIT_OK)
    } else {
        print!("{}: {} issue(s)\n{report}", cfg.case.display(), report.issues.len());
        Ok(EXIT_INVALID)
    }
}

pub fn cmd_gen_scenarios(cfg: &RunConfig) -> Result<i32> {
    let case = load_case(cfg)?;
    let scen = cfg.scenarios(&case)?;
    create_dir(&cfg.out)?;
    write_json(&cfg.out.join("scenarios.json"), &scen)?;
    write_json(&cfg.out.join("manifest.json"), &cfg.manifest("gen-scenarios", Some(&scen))?)?;
    for ((label, w), p) in scen.labels.iter().zip(&scen.weights).zip(&scen.scenarios) {
        println!("{label:<12} weight {w:<6} average power {:.6} p.u.", p.average_power());
    }
    Ok(EXIT_OK)
}

pub fn cmd_solve(cfg: &RunConfig, baseline: bool) -> Result<i32> {
    let case = load_case(cfg)?;
    let scen = cfg.scenarios(&case)?;
    let backend = cfg.backend()?;
    let options = BuildOptions {
        droop_coupling: !baseline,
    };
    create_dir(&cfg.out)?;
    let model = build_model(&case, &scen, options)?;
    write_lp_file(&model, cfg.out.join("model.lp"))?;
    write_json(&cfg.out.join("manifest.json"), &cfg.manifest("solve", Some(&scen))?)?;

    let label = if baseline { "baseline" } else { "proposed" };
    let run = run_case(label, &case, &scen, options, &backend);
    eprintln!(
        "{label}: {} in {:.1} s ({} variables, {} binaries)",
        run.status, run.wall_time, run.num_vars, run.num_binaries
    );
    if !run.succeeded() {
        eprintln!("{}", run.message);
        return Ok(match run.status.parse::<SolveStatus>() {
            Ok(SolveStatus::Infeasible) => EXIT_INFEASIBLE,
            _ => EXIT_ERROR,
        });
    }
    write_case_artifacts(&cfg.out, &run)?;
    let report = run.report.as_ref().expect("successful run has a report");
    println!(
        "objective {:.6}  LSR {:.2} % (critical {:.2} %)  max |df| {:.4} Hz  max |dU| {:.5} p.u.",
        report.objective,
        report.lsr_all,
        report.lsr_critical,
        report.max_frequency_variation_hz,
        report.max_voltage_variation_pu
    );
    Ok(EXIT_OK)
}

/// `plan.json`, `report.json` and `report.csv` of one successful run.
fn write_case_artifacts(dir: &Path, run: &CaseRun) -> Result<()> {
    if let Some(plan) = &run.plan {
        write_json(&dir.join("plan.json"), plan)?;
    }
    if let Some(realized) = &run.realized {
        write_json(&dir.join("realized.json"), realized)?;
    }
    if let Some(report) = &run.report {
        write_json(
            &dir.join("report.json"),
            &json!({
                "case": run.label,
                "status": run.status,
                "options": run.options,
                "num_vars": run.num_vars,
                "num_binaries": run.num_binaries,
                "num_constraints": run.num_constraints,
                "scenario_digest": run.scenario_digest,
                "expost": run.expost,
                "report": report,
            }),
        )?;
        write_report_csv([(run.label.as_str(), report)], dir.join("report.csv"))?;
    }
    Ok(())
}

pub fn cmd_sweep(cfg: &RunConfig, kind: SweepKind) -> Result<i32> {
    let case = load_case(cfg)?;
    let scen = cfg.scenarios(&case)?;
    let backend = cfg.backend()?;
    let sweep = match kind {
        SweepKind::Hydrogen => run_hydrogen_sweep(&case, &scen, &backend, cfg.jobs)?,
        SweepKind::Gridforming => run_gridforming_sweep(&case, &scen, &backend, cfg.jobs)?,
        SweepKind::Baseline => run_baseline_comparison(&case, &scen, &backend, cfg.jobs)?,
    };
    create_dir(&cfg.out)?;
    for run in &sweep.cases {
        let dir = cfg.out.join(&run.label);
        create_dir(&dir)?;
        if !run.succeeded() {
            write_json(
                &dir.join("report.json"),
                &json!({ "case": run.label, "status": run.status, "message": run.message }),
            )?;
            continue;
        }
        write_case_artifacts(&dir, run)?;
    }
    sweep.write_sweep_csv(cfg.out.join("sweep.csv"))?;
    write_report_csv(
        sweep
            .cases
            .iter()
            .filter_map(|c| c.report.as_ref().map(|r| (c.label.as_str(), r))),
        cfg.out.join("report.csv"),
    )?;
    let notes: String = sweep.diagnostics.iter().map(|d| format!("{d}\n")).collect();
    fs::write(cfg.out.join("diagnostics.txt"), &notes).map_err(|e| Error::io(cfg.out.join("diagnostics.txt"), e))?;
    write_json(&cfg.out.join("manifest.json"), &cfg.manifest(&format!("sweep {kind}"), Some(&scen))?)?;

    for run in &sweep.cases {
        match run.objective() {
            Some(obj) => println!("{:<9} {:<9} objective {obj:.6}", run.label, run.status),
            None => println!("{:<9} {:<9} {}", run.label, run.status, run.message.lines().next().unwrap_or("")),
        }
    }
    for d in &sweep.diagnostics {
        println!("note: {d}");
    }
    Ok(if sweep.any_failed() { EXIT_SWEEP_FAILED } else { EXIT_OK })
}
