//! Python bindings. Structured results cross the boundary as JSON strings.

use std::time::Duration;

use h2grid::analysis::run_case;
use h2grid::case::{read_case_file, validate_case, MicrogridCase};
use h2grid::milp::{build_model, expected_variable_count, BuildOptions};
use h2grid::scenario::{build_scenario_set, load_forecast_csv, sample_error_scenarios, ScenarioSet};
use h2grid::solver::{write_lp_file, Backend, ExternalSolverConfig, DEFAULT_BINARY_BUDGET};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn err(e: h2grid::Error) -> PyErr {
    match e {
        h2grid::Error::Io { .. } | h2grid::Error::Solver(_) | h2grid::Error::Plan(_) => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> PyResult<String> {
    serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

fn valid_case(path: &str) -> PyResult<MicrogridCase> {
    let case = read_case_file(path).map_err(err)?;
    let report = validate_case(&case);
    if report.is_empty() {
        Ok(case)
    } else {
        Err(PyValueError::new_err(format!("{path} is invalid:\n{report}")))
    }
}

fn scenario_set(case: &MicrogridCase, forecast: &str, samples: usize, seed: u64) -> PyResult<ScenarioSet> {
    if samples == 0 {
        return Err(PyValueError::new_err("samples must be at least 1"));
    }
    let fc = load_forecast_csv(forecast, case).map_err(err)?;
    build_scenario_set(&fc, &sample_error_scenarios(&fc, samples, seed)).map_err(err)
}

/// Parse a case file and return it in per-unit form as JSON.
#[pyfunction]
fn load_case(path: &str) -> PyResult<String> {
    to_json(&read_case_file(path).map_err(err)?)
}

/// Validation issues of a case file as `(code, path, message)` tuples;
/// empty when the case is usable.
#[pyfunction]
fn validate(path: &str) -> PyResult<Vec<(String, String, String)>> {
    let case = read_case_file(path).map_err(err)?;
    Ok(validate_case(&case)
        .issues
        .into_iter()
        .map(|i| (i.code, i.path, i.message))
        .collect())
}

/// The three-scenario set (max-average, min-average, forecast) as JSON.
#[pyfunction]
#[pyo3(signature = (case_path, forecast_path, samples = 100, seed = 42))]
fn scenarios(case_path: &str, forecast_path: &str, samples: usize, seed: u64) -> PyResult<String> {
    let case = valid_case(case_path)?;
    to_json(&scenario_set(&case, forecast_path, samples, seed)?)
}

/// Build the dispatch model, write it in LP format and return
/// `(variables, binaries, constraints)`.
#[pyfunction]
#[pyo3(signature = (case_path, forecast_path, lp_path, samples = 100, seed = 42, droop_coupling = true))]
fn write_model(
    case_path: &str,
    forecast_path: &str,
    lp_path: &str,
    samples: usize,
    seed: u64,
    droop_coupling: bool,
) -> PyResult<(usize, usize, usize)> {
    let case = valid_case(case_path)?;
    let scen = scenario_set(&case, forecast_path, samples, seed)?;
    let options = BuildOptions { droop_coupling };
    let model = build_model(&case, &scen, options).map_err(err)?;
    debug_assert_eq!(model.num_vars(), expected_variable_count(&case, scen.len(), options));
    write_lp_file(&model, lp_path).map_err(err)?;
    Ok((model.num_vars(), model.num_binaries(), model.constraints.len()))
}

/// Build, solve and report one dispatch; returns the run as JSON.
///
/// Without `solver_cmd` the model is solved by in-process enumeration,
/// which only accepts models with a handful of free binaries.
#[pyfunction]
#[pyo3(signature = (case_path, forecast_path, solver_cmd = None, samples = 100, seed = 42, droop_coupling = true, time_limit = 600.0))]
fn solve(
    py: Python<'_>,
    case_path: &str,
    forecast_path: &str,
    solver_cmd: Option<String>,
    samples: usize,
    seed: u64,
    droop_coupling: bool,
    time_limit: f64,
) -> PyResult<String> {
    if !(time_limit > 0.0 && time_limit.is_finite()) {
        return Err(PyValueError::new_err("time_limit must be positive"));
    }
    let case = valid_case(case_path)?;
    let scen = scenario_set(&case, forecast_path, samples, seed)?;
    let backend = match solver_cmd {
        Some(cmd) => Backend::External(ExternalSolverConfig {
            time_limit: Duration::from_secs_f64(time_limit),
            ..ExternalSolverConfig::new(cmd)
        }),
        None => Backend::Enumeration {
            budget: DEFAULT_BINARY_BUDGET,
        },
    };
    let options = BuildOptions { droop_coupling };
    let run = py.detach(|| run_case("python", &case, &scen, options, &backend));
    to_json(&run)
}

/// Run the command-line interface with `args` (without the program name)
/// and return its exit code.
#[pyfunction]
fn main(py: Python<'_>, args: Vec<String>) -> i32 {
    let argv: Vec<String> = std::iter::once("h2grid".to_string()).chain(args).collect();
    py.detach(|| h2grid::cli::run(argv))
}

#[pymodule]
#[pyo3(name = "h2grid")]
fn h2grid_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(load_case, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(scenarios, m)?)?;
    m.add_function(wrap_pyfunction!(write_model, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(main, m)?)?;
    Ok(())
}
