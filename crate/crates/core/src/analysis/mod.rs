//! Resilience indexes and the experiment harnesses built on them.

mod experiments;
mod expost;
mod metrics;

pub(crate) use experiments::scenario_digest;
pub use experiments::{
    run_baseline_comparison, run_case, run_gridforming_sweep, run_hydrogen_sweep, write_report_csv, CaseRun, Sweep,
    SweepKind, HYDROGEN_FILLS,
};
pub use expost::{bisect_decreasing, droop_equilibrium, ExPostSummary, FREQUENCY_TOLERANCE, VOLTAGE_TOLERANCE};
pub use metrics::{compute_lsr, compute_resilience_report, HydrogenTrajectory, LoadClass, PowerStep, ResilienceReport};
