//! Resilient dispatch of islanded microgrids with hydrogen storage and
//! droop-controlled inverters.
//!
//! The dispatch problem is a scenario-based mixed-integer linear program:
//! load pickup and hydrogen operating modes are decided once, while
//! frequency, voltages and device outputs follow each forecast-error
//! scenario through the devices' droop characteristics.
//!
//! The usual flow is
//! [`load_case_file`](case::load_case_file) →
//! [`load_forecast_csv`](scenario::load_forecast_csv) →
//! [`build_scenario_set`](scenario::build_scenario_set) →
//! [`build_model`](milp::build_model) →
//! [`invoke_external_solver`](solver::invoke_external_solver) →
//! [`extract_plan`](milp::extract_plan) →
//! [`compute_resilience_report`](analysis::compute_resilience_report).

pub mod analysis;
pub mod case;
pub mod cli;
pub mod error;
pub mod milp;
pub mod response;
pub mod scenario;
pub mod solver;
pub mod toy;

pub use error::{Error, Result};
