//! Run all three sweeps on the bundled 13-bus fixture and print a summary.
//!
//! Needs `H2GRID_SOLVER_CMD`, e.g.
//! `python3 tools/highs_solve.py {lp} {sol}`.

use std::path::Path;
use std::time::Instant;

use h2grid::analysis::{run_baseline_comparison, run_gridforming_sweep, run_hydrogen_sweep, Sweep};
use h2grid::case::load_case_file;
use h2grid::scenario::{build_scenario_set, load_forecast_csv, sample_error_scenarios};
use h2grid::solver::{Backend, ExternalSolverConfig};

fn show(name: &str, sweep: &Sweep) {
    println!("== {name}");
    for c in &sweep.cases {
        let r = c.report.as_ref();
        println!(
            "{:>9} {:>10} obj={:<14} lsr={:<8.3} crit={:<8.3} maxdf={:<8.4} maxdu={:<8.5} t={:.1}s {}",
            c.label,
            c.status,
            c.objective().map_or("-".into(), |o| format!("{o:.6}")),
            r.map_or(f64::NAN, |r| r.lsr_all),
            r.map_or(f64::NAN, |r| r.lsr_critical),
            r.map_or(f64::NAN, |r| r.max_frequency_variation_hz),
            r.map_or(f64::NAN, |r| r.max_voltage_variation_pu),
            c.wall_time,
            c.message.lines().next().unwrap_or("")
        );
    }
    for d in &sweep.diagnostics {
        println!("  note: {d}");
    }
}

fn main() -> h2grid::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let case = load_case_file(dir.join("ieee13.json"))?;
    let fc = load_forecast_csv(dir.join("ieee13_forecast.csv"), &case)?;
    let samples = sample_error_scenarios(&fc, 100, 42);
    let scen = build_scenario_set(&fc, &samples)?;
    let cfg = ExternalSolverConfig::from_env().expect("set H2GRID_SOLVER_CMD");
    let backend = Backend::External(cfg);
    let which = std::env::args().nth(1).unwrap_or_else(|| "all".into());
    let t0 = Instant::now();
    if which == "all" || which == "hydrogen" {
        show("hydrogen", &run_hydrogen_sweep(&case, &scen, &backend, 1)?);
    }
    if which == "all" || which == "gridforming" {
        show("gridforming", &run_gridforming_sweep(&case, &scen, &backend, 1)?);
    }
    if which == "all" || which == "baseline" {
        show("baseline", &run_baseline_comparison(&case, &scen, &backend, 1)?);
    }
    println!("total {:.1}s", t0.elapsed().as_secs_f64());
    Ok(())
}
