mod common;

use common::{fixture_case, Draw};
use h2grid::case::ControlMode;
use h2grid::milp::{
    build_model, expected_variable_count, linearize_binary_product, BuildOptions, MilpModel, Sense, Tag, VarKey,
};
use h2grid::scenario::{Profile, ScenarioSet};
use h2grid::solver::{solve_enumeration, write_lp};
use h2grid::toy;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn piecewise_block_matches_closed_form(kind in 0u8..4, u in prop::array::uniform6(0.0f64..=1.0)) {
        let draw = Draw::from_unit(kind, u);
        let err = draw.error();
        prop_assert!(err <= 1e-6, "{draw:?}: deviation {err}");
    }
}

#[test]
fn product_is_exact_on_grid() {
    for p_ub in [0.5, 1.0, 7.25] {
        for x_val in [0.0, 1.0] {
            for p_val in [0.0, p_ub / 2.0, p_ub] {
                let mut m = MilpModel::new();
                let x = m.add_binary(VarKey::Named("x".into()));
                let p = m.add_var(VarKey::Named("p".into()), 0.0, p_ub, false);
                let y = m.add_var(VarKey::Named("y".into()), f64::NEG_INFINITY, f64::INFINITY, false);
                linearize_binary_product(&mut m, x, p, y, Tag::ProductLinearization).unwrap();
                m.add_constraint(&[(x, 1.0)], Sense::Eq, x_val, Tag::Plumbing);
                m.add_constraint(&[(p, 1.0)], Sense::Eq, p_val, Tag::Plumbing);
                for sign in [1.0, -1.0] {
                    m.set_objective(y, sign);
                    let r = solve_enumeration(&m, 4).unwrap();
                    assert_eq!(r.values.unwrap()[y], x_val * p_val, "x={x_val} p={p_val} sign={sign}");
                }
            }
        }
    }
}

#[test]
fn fixture_count_matches_formula() {
    let (case, scen) = fixture_case();
    for droop_coupling in [true, false] {
        let options = BuildOptions { droop_coupling };
        let model = build_model(&case, &scen, options).unwrap();
        // 8 loads, 1 hydrogen source, 2 droop renewables, 13 buses, 12 branches
        let per = 1 + 13 + 2 * 12 + 7 + 2 * 2 + if droop_coupling { 11 + 16 } else { 0 };
        let hand = 24 * (8 + 2) + 3 * 24 * per;
        assert_eq!(model.num_vars(), hand);
        assert_eq!(expected_variable_count(&case, scen.len(), options), hand);
        assert!(model.index.is_bijective());
    }
}

#[test]
fn fixture_constant_pq_count() {
    let (case, scen) = fixture_case();
    let case = case.with_control_modes(&[ControlMode::ConstantPq, ControlMode::Droop]);
    let model = build_model(&case, &scen, BuildOptions::default()).unwrap();
    // one droop renewable loses its 8 segments and gains a per-scenario selector,
    // plus a shared setpoint per period
    let per = 1 + 13 + 2 * 12 + 7 + 2 * 2 + 1 + 11 + 8;
    assert_eq!(model.num_vars(), 24 * (8 + 2 + 1) + 3 * 24 * per);
}

#[test]
fn shared_decisions_are_not_copied_per_scenario() {
    let (case, scen) = fixture_case();
    let model = build_model(&case, &scen, BuildOptions::default()).unwrap();
    let shared = model
        .index
        .keys()
        .filter(|k| matches!(k, VarKey::LoadPickup { .. } | VarKey::ElectrolyzerOn { .. } | VarKey::FuelCellOn { .. }))
        .count();
    assert_eq!(shared, 24 * (8 + 2));
    let freq = model.index.keys().filter(|k| matches!(k, VarKey::Frequency { .. })).count();
    assert_eq!(freq, 3 * 24);
}

#[test]
fn fixture_model_is_well_formed_and_fast() {
    let (case, scen) = fixture_case();
    let start = std::time::Instant::now();
    let model = build_model(&case, &scen, BuildOptions::default()).unwrap();
    assert!(start.elapsed().as_secs_f64() < 5.0);
    assert!(model.is_well_formed());
    let counts = model.tag_counts();
    for tag in [Tag::ElectrolyzerDroop, Tag::FuelCellDroop, Tag::VoltVar, Tag::RenewableDroop, Tag::TankBalance, Tag::VoltageDrop] {
        assert!(counts.get(&tag).copied().unwrap_or(0) > 0, "no {tag} rows");
    }
}

fn tiny_lp() -> MilpModel {
    let mut m = MilpModel::new();
    let a = m.add_var(VarKey::Named("a".into()), 0.0, 4.0, false);
    let b = m.add_binary(VarKey::Named("b".into()));
    m.set_objective(a, 2.0);
    m.set_objective(b, 1.5);
    m.add_constraint(&[(a, 1.0), (b, 3.0)], Sense::Le, 5.0, Tag::ActiveBalance);
    m.add_constraint(&[(a, 1.0), (b, -1.0)], Sense::Ge, -0.5, Tag::ActiveBalance);
    m.add_constraint(&[(b, 1.0)], Sense::Eq, 1.0, Tag::ModeExclusion);
    m
}

#[test]
fn lp_file_golden() {
    let mut buf = Vec::new();
    write_lp(&tiny_lp(), &mut buf).unwrap();
    let expected = "\
\\ 2 variables, 3 constraints
Maximize
 obj: + 2 v0 + 1.5 v1
Subject To
\\ active_balance
 c0: + 1 v0 + 3 v1 <= 5
 c1: + 1 v0 - 1 v1 >= -0.5
\\ mode_exclusion
 c2: + 1 v1 = 1
Bounds
 0 <= v0 <= 4
 0 <= v1 <= 1
Binary
 v1
End
";
    assert_eq!(String::from_utf8(buf).unwrap(), expected);
    let r = solve_enumeration(&tiny_lp(), 2).unwrap();
    assert!((r.objective.unwrap() - 5.5).abs() < 1e-12);
}

#[test]
fn scenario_count_scales_only_recourse() {
    let case = toy::two_bus_case();
    let p = Profile {
        renewable_mpp: vec![vec![0.2, 0.3]],
        load_p: vec![vec![0.4, 0.5]],
    };
    let one = ScenarioSet::single(p.clone());
    let three = ScenarioSet::new(
        vec!["a".into(), "b".into(), "c".into()],
        vec![0.2, 0.3, 0.5],
        vec![p.clone(), p.clone(), p],
    )
    .unwrap();
    let opts = BuildOptions::default();
    let m1 = build_model(&case, &one, opts).unwrap().num_vars();
    let m3 = build_model(&case, &three, opts).unwrap().num_vars();
    let shared = 2 * (1 + 2);
    assert_eq!(m3 - shared, 3 * (m1 - shared));
}
