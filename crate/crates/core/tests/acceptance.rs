//! End-to-end checks on the bundled fixture, one line per criterion.
//!
//! Criteria 3 and 5 to 9 need an external MILP solver: `$H2GRID_SOLVER_CMD`,
//! or `tools/highs_solve.py` when python3 with highspy or scipy is present.
//! Without one they are reported as skipped.

mod common;

use std::io::Write;
use std::time::Instant;

use common::{external, fixture_case, micro_instances, solver_available, Draw};
use h2grid::analysis::{
    run_baseline_comparison, run_case, run_gridforming_sweep, run_hydrogen_sweep, Sweep, FREQUENCY_TOLERANCE,
    VOLTAGE_TOLERANCE,
};
use h2grid::case::MicrogridCase;
use h2grid::milp::{build_model, linearize_binary_product, BuildOptions, MilpModel, OperationPlan, Sense, Tag, VarKey};
use h2grid::response::tank_increment;
use h2grid::solver::{solve_enumeration, Backend, DEFAULT_BINARY_BUDGET};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Written past the test harness capture so the lines show up in plain
/// `cargo test` output.
fn report(results: &mut Vec<(u8, bool)>, n: u8, outcome: Option<bool>, detail: String) {
    let word = match outcome {
        Some(true) => "PASS",
        Some(false) => "FAIL",
        None => "SKIP",
    };
    let _ = writeln!(std::io::stderr(), "criterion {n}: {word}  {detail}");
    if let Some(ok) = outcome {
        results.push((n, ok));
    }
}

fn piecewise_exactness() -> (bool, String) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let mut per_kind = [0usize; 4];
    for i in 0..1200 {
        let kind = (i % 4) as u8;
        let u: [f64; 6] = std::array::from_fn(|_| rng.gen());
        let d = Draw::from_unit(kind, u);
        per_kind[kind as usize] += 1;
        worst = worst.max(d.error());
    }
    let secs = start.elapsed().as_secs_f64();
    (
        worst <= 1e-6 && secs < 60.0,
        format!("1200 draws {per_kind:?} (ely, fc, renewable, volt-var), worst deviation {worst:.2e}, {secs:.1} s"),
    )
}

fn product_exactness() -> (bool, String) {
    let mut checked = 0;
    let mut ok = true;
    for x_val in [0.0, 1.0] {
        for p_val in [0.0, 0.5, 1.0] {
            let mut m = MilpModel::new();
            let x = m.add_binary(VarKey::Named("x".into()));
            let p = m.add_var(VarKey::Named("p".into()), 0.0, 1.0, false);
            let y = m.add_var(VarKey::Named("y".into()), f64::NEG_INFINITY, f64::INFINITY, false);
            linearize_binary_product(&mut m, x, p, y, Tag::ProductLinearization).unwrap();
            m.add_constraint(&[(x, 1.0)], Sense::Eq, x_val, Tag::Plumbing);
            m.add_constraint(&[(p, 1.0)], Sense::Eq, p_val, Tag::Plumbing);
            for sign in [1.0, -1.0] {
                m.set_objective(y, sign);
                let v = solve_enumeration(&m, 2).unwrap().values.unwrap()[y];
                ok &= v == x_val * p_val;
                checked += 1;
            }
        }
    }
    (ok, format!("{checked} extreme points over x in {{0,1}}, p in {{0, ub/2, ub}}"))
}

fn oracle_equivalence(ext: &Backend) -> (bool, String) {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    let all = micro_instances();
    for (name, case, scen, opts) in &all {
        let model = build_model(case, scen, *opts).unwrap();
        let exact = solve_enumeration(&model, DEFAULT_BINARY_BUDGET).unwrap();
        let other = ext.solve(&model).unwrap();
        match (exact.objective, other.objective) {
            (Some(a), Some(b)) => {
                let rel = (a - b).abs() / a.abs().max(1.0);
                worst = worst.max(rel);
                if rel > 1e-5 {
                    failures.push(format!("{name}: {a} vs {b}"));
                }
            }
            _ => failures.push(format!("{name}: {} vs {}", exact.status, other.status)),
        }
    }
    let secs = start.elapsed().as_secs_f64();
    (
        failures.is_empty() && secs < 300.0,
        format!(
            "{} micro-instances, worst relative gap {worst:.1e}, {secs:.1} s{}",
            all.len(),
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
        ),
    )
}

/// Worst per-(s, t) balance residual and worst tank telescoping error
/// (relative to `h_max`) of `plan`.
fn balance_errors(plan: &OperationPlan, case: &MicrogridCase) -> (f64, f64) {
    let (mut bal, mut tel): (f64, f64) = (0.0, 0.0);
    for st in &plan.scenarios {
        for t in 0..case.horizon.periods {
            let gen: f64 = st.hydrogen_p.iter().chain(&st.renewable_p).map(|p| p[t]).sum();
            let served: f64 = st
                .load_p
                .iter()
                .zip(&plan.load_pickup)
                .map(|(p, on)| if on[t] { p[t] } else { 0.0 })
                .sum();
            bal = bal.max((gen - served).abs());
        }
        for (h, hs) in case.hydrogen_sources.iter().enumerate() {
            let mut sum = 0.0;
            for t in 0..case.horizon.periods {
                let mode = plan.hydrogen_mode(h, t);
                sum += tank_increment(mode, st.electrolyzer_power[h][t], st.fuel_cell_power[h][t], case.horizon.step_hours, hs);
            }
            let end = st.tank[h].last().copied().unwrap_or(hs.h_init);
            tel = tel.max((end - hs.h_init - sum).abs() / hs.h_max.max(1.0));
        }
    }
    (bal, tel)
}

fn balance_and_telescoping(plans: &[(String, MicrogridCase, OperationPlan)]) -> (bool, String) {
    let (mut bal, mut tel): (f64, f64) = (0.0, 0.0);
    for (_, case, plan) in plans {
        let (b, t) = balance_errors(plan, case);
        bal = bal.max(b);
        tel = tel.max(t);
    }
    (
        !plans.is_empty() && bal <= 1e-6 && tel <= 1e-12,
        format!("{} plans, worst balance residual {bal:.1e}, worst telescoping error {tel:.1e}", plans.len()),
    )
}

fn plans_of(sweep: &Sweep, case_of: impl Fn(&str) -> MicrogridCase) -> Vec<(String, MicrogridCase, OperationPlan)> {
    sweep
        .cases
        .iter()
        .filter_map(|c| Some((c.label.clone(), case_of(&c.label), c.plan.clone()?)))
        .collect()
}

fn hydrogen_monotonicity(sweep: &Sweep) -> (bool, String) {
    let obj = |l: &str| sweep.case(l).and_then(|c| c.objective());
    let labels = ["O", "A", "B", "C", "D", "E"];
    let values: Vec<Option<f64>> = labels.iter().map(|l| obj(l)).collect();
    let shown: Vec<String> = labels
        .iter()
        .zip(&values)
        .map(|(l, v)| {
            let status = sweep.case(l).map_or("missing", |c| c.status.as_str());
            match v {
                Some(v) => format!("{l}={v:.6} ({status})"),
                None => format!("{l}=- ({status})"),
            }
        })
        .collect();
    let Some(vals) = values.iter().copied().collect::<Option<Vec<f64>>>() else {
        return (false, shown.join(", "));
    };
    let o = vals[0];
    let fills = &vals[1..];
    let monotone = fills.windows(2).all(|w| w[1] >= w[0] - 1e-6 * w[0].abs().max(1.0));
    let above_o = fills.iter().all(|&v| v > o + 1e-6 * o.abs().max(1.0));
    (monotone && above_o, format!("{}; non-decreasing {monotone}, all above O {above_o}", shown.join(", ")))
}

fn baseline_comparison(sweep: &Sweep) -> (bool, String) {
    let rep = |l: &str| sweep.case(l).and_then(|c| c.report.as_ref());
    let (Some(p), Some(b)) = (rep("proposed"), rep("baseline")) else {
        return (false, "proposed or baseline run failed".into());
    };
    let f_ok = p.max_frequency_variation_hz <= b.max_frequency_variation_hz + FREQUENCY_TOLERANCE;
    let u_ok = p.max_voltage_variation_pu <= b.max_voltage_variation_pu + VOLTAGE_TOLERANCE;
    (
        f_ok && u_ok,
        format!(
            "max |df| {:.6} vs {:.6} Hz, max |dU| {:.9} vs {:.9} p.u. (proposed vs baseline realized); LSR {:.2} -> {:.2} %, critical {:.2} -> {:.2} %",
            p.max_frequency_variation_hz,
            b.max_frequency_variation_hz,
            p.max_voltage_variation_pu,
            b.max_voltage_variation_pu,
            b.lsr_all,
            p.lsr_all,
            b.lsr_critical,
            p.lsr_critical,
        ),
    )
}

fn gridforming(sweep: &Sweep) -> (bool, String) {
    let rep = |l: &str| sweep.case(l).and_then(|c| c.report.as_ref());
    let (Some(one), Some(three)) = (rep("I"), rep("III")) else {
        return (false, "case I or III failed".into());
    };
    let ok = three.objective >= one.objective - 1e-6 * one.objective.abs().max(1.0)
        && three.lsr_critical >= one.lsr_critical - 1e-9;
    (
        ok,
        format!(
            "objective {:.6} -> {:.6}, critical LSR {:.3} -> {:.3} % (I -> III)",
            one.objective, three.objective, one.lsr_critical, three.lsr_critical
        ),
    )
}

fn sweep_csv(sweep: &Sweep) -> Vec<u8> {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    sweep.write_sweep_csv(&path).unwrap();
    std::fs::read(path).unwrap()
}

#[test]
fn acceptance() {
    let mut results = Vec::new();

    let (ok, d) = piecewise_exactness();
    report(&mut results, 1, Some(ok), d);
    let (ok, d) = product_exactness();
    report(&mut results, 2, Some(ok), d);

    let (case, scen) = fixture_case();
    let have_solver = solver_available();
    let ext = external(600);

    if have_solver {
        let (ok, d) = oracle_equivalence(&ext);
        report(&mut results, 3, Some(ok), d);
    } else {
        report(&mut results, 3, None, "no external solver".into());
    }

    let enumeration = Backend::Enumeration {
        budget: DEFAULT_BINARY_BUDGET,
    };
    let mut plans: Vec<(String, MicrogridCase, OperationPlan)> = micro_instances()
        .into_iter()
        .filter_map(|(name, case, scen, opts)| {
            let plan = run_case(&name, &case, &scen, opts, &enumeration).plan?;
            Some((name, case, plan))
        })
        .collect();

    if !have_solver {
        let (ok, d) = balance_and_telescoping(&plans);
        report(&mut results, 4, Some(ok), d);
        for n in 5..=9 {
            report(&mut results, n, None, "no external solver".into());
        }
        assert!(results.iter().all(|r| r.1));
        return;
    }

    let build_start = Instant::now();
    build_model(&case, &scen, BuildOptions::default()).unwrap();
    let build_secs = build_start.elapsed().as_secs_f64();

    let hydrogen = run_hydrogen_sweep(&case, &scen, &ext, 1).unwrap();
    let gf = run_gridforming_sweep(&case, &scen, &ext, 1).unwrap();
    let baseline = run_baseline_comparison(&case, &scen, &ext, 1).unwrap();

    plans.extend(plans_of(&hydrogen, |l| match l {
        "O" => case.without_hydrogen(),
        l => {
            let fill = h2grid::analysis::HYDROGEN_FILLS.iter().find(|f| f.0 == l).unwrap().1;
            case.with_fill(fill)
        }
    }));
    plans.extend(plans_of(&baseline, |_| case.clone()));
    let (ok, d) = balance_and_telescoping(&plans);
    report(&mut results, 4, Some(ok), d);

    let (ok, d) = hydrogen_monotonicity(&hydrogen);
    let secs: f64 = hydrogen.cases.iter().map(|c| c.wall_time).sum();
    report(&mut results, 5, Some(ok && secs < 600.0), format!("{d}; {secs:.0} s"));

    let (ok, d) = baseline_comparison(&baseline);
    report(&mut results, 6, Some(ok), d);

    let (ok, d) = gridforming(&gf);
    report(&mut results, 7, Some(ok), d);

    let again = run_gridforming_sweep(&case, &scen, &ext, 1).unwrap();
    let (a, b) = (sweep_csv(&gf), sweep_csv(&again));
    report(
        &mut results,
        8,
        Some(a == b),
        format!("grid-forming sweep run twice, sweep.csv {} and {} bytes, identical {}", a.len(), b.len(), a == b),
    );

    let full = baseline.case("proposed").unwrap();
    let ok = full.succeeded() && full.wall_time < 600.0 && build_secs < 5.0;
    report(
        &mut results,
        9,
        Some(ok),
        format!(
            "fixture solve {} in {:.1} s ({} variables, {} binaries, {} rows), build {:.2} s",
            full.status, full.wall_time, full.num_vars, full.num_binaries, full.num_constraints, build_secs
        ),
    );

    let failed: Vec<u8> = results.iter().filter(|r| !r.1).map(|r| r.0).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
