mod common;

use common::{population, tiny};
use offload_core::equilibrium::SolverOptions;
use offload_core::experiments::sweep::relative_gain;
use offload_core::experiments::{
    run_disutility_sweep, run_scenario_sweep, summary_text, AxisValue, Baseline, Calibration, Check,
    CheckKind, SweepAxis, SweepSpec,
};
use offload_core::{DelayScenario, SchemeFamily};

fn quick() -> SolverOptions {
    SolverOptions {
        flat_grid: 60,
        volume_grid: 40,
        two_tier_fee_grid: 10,
        two_tier_cap_grid: 8,
        two_tier_refine_rounds: 1,
        ..SolverOptions::default()
    }
}

#[test]
fn relative_gain_formula() {
    assert_eq!(relative_gain(150.0, 100.0), Some(0.5));
    assert_eq!(relative_gain(80.0, 100.0), Some(-0.2));
    assert_eq!(relative_gain(1.0, 0.0), None);
    assert_eq!(relative_gain(1.0, -2.0), None);
}

#[test]
fn presets() {
    let paper = Calibration::preset("paper").unwrap();
    assert_eq!((paper.model.num_cells, paper.model.users_per_cell), (31, 1000));
    assert!((paper.demand.mean() - 1300.0 / 30.0).abs() < 1e-9);
    let desk = Calibration::preset("desk").unwrap();
    let congested = Calibration::preset("congested").unwrap();
    assert!(congested.model.capacity_per_cell < desk.model.capacity_per_cell);
    assert!(Calibration::preset("huge").is_err());
    for c in [paper, desk, congested] {
        c.validate().unwrap();
    }
}

#[test]
fn sweep_specs_are_validated() {
    let ok = SweepSpec::scenarios(vec![SchemeFamily::Flat], 2);
    ok.validate().unwrap();
    assert_eq!(ok.seeds().collect::<Vec<_>>(), vec![1, 2]);
    let bad = |f: fn(&mut SweepSpec)| {
        let mut s = ok.clone();
        f(&mut s);
        assert!(s.validate().is_err(), "{s:?}");
    };
    bad(|s| s.values.clear());
    bad(|s| s.repetitions = 0);
    bad(|s| s.families.clear());
    bad(|s| s.values.push(AxisValue::Name("forever".into())));
    bad(|s| s.baseline = Baseline::Value(AxisValue::Number(3.0)));
    bad(|s| {
        s.axis = SweepAxis::Disutility;
        s.values = vec![AxisValue::Number(1.5)];
        s.baseline = Baseline::None;
    });
    bad(|s| {
        s.axis = SweepAxis::Mix;
        s.values = vec![AxisValue::Mix([(DelayScenario::Zero, 0.5)].into())];
        s.baseline = Baseline::None;
    });
    bad(|s| {
        s.axis = SweepAxis::Capacity;
        s.values = vec![AxisValue::Number(0.0)];
        s.baseline = Baseline::None;
    });
}

#[test]
fn sweep_specs_parse_from_toml() {
    let spec: SweepSpec = toml::from_str(
        r#"
        axis = "demand_mean"
        values = [20.0, 40.0]
        families = ["flat", "two_tier"]
        baseline = { value = 20.0 }
        repetitions = 3
        "#,
    )
    .unwrap();
    spec.validate().unwrap();
    assert_eq!(spec.baseline, Baseline::Value(AxisValue::Number(20.0)));
    assert_eq!(spec.scenario, DelayScenario::Zero);
    assert!(toml::from_str::<SweepSpec>("axis = \"capacity\"\nvalues = [1.0]\nbogus = 1").is_err());
}

#[test]
fn scenario_variants_share_everything_but_delay() {
    let cal = tiny(4, 50, DelayScenario::Zero);
    let base = population(&cal, 3);
    let long = base.with_scenario(DelayScenario::Long).unwrap();
    for (a, b) in base.profiles.iter().zip(&long.profiles) {
        assert_eq!(a.daily_demand(), b.daily_demand());
        assert_eq!(a.willingness(), b.willingness());
        assert_eq!(a.cell_path(), b.cell_path());
        assert_eq!(a.wifi_contact(), b.wifi_contact());
        assert_ne!(a.delay_profile(), b.delay_profile());
    }
    let again = population(&cal, 3);
    assert_eq!(base.profiles, again.profiles);
    assert_ne!(population(&cal, 4).profiles, base.profiles);
}

#[test]
fn sweep_points_follow_the_gain_formula_and_rerun_identically() {
    let cal = tiny(4, 40, DelayScenario::Zero);
    let spec = SweepSpec::scenarios(vec![SchemeFamily::Flat, SchemeFamily::Volume], 2);
    let report = run_scenario_sweep(&cal, &spec, &quick()).unwrap();
    assert_eq!(report.points.len(), 4 * 2 * 2);
    assert_eq!(report.rows.len(), 4 * 2);
    for p in &report.points {
        let base = report
            .points
            .iter()
            .find(|q| q.value == "zero" && q.family == p.family && q.seed == p.seed)
            .unwrap();
        assert_eq!(p.baseline_revenue, Some(base.revenue));
        assert_eq!(p.relative_gain, relative_gain(p.revenue, base.revenue));
    }
    for r in report.rows.iter().filter(|r| r.value == "zero") {
        assert_eq!(r.relative_gain, Some(0.0));
    }

    let dir = tempfile::tempdir().unwrap();
    let again = run_scenario_sweep(&cal, &spec, &quick()).unwrap();
    for (k, r) in [&report, &again].into_iter().enumerate() {
        r.write_rows(&dir.path().join(format!("rows{k}.csv"))).unwrap();
        r.write_points(&dir.path().join(format!("points{k}.csv"))).unwrap();
    }
    for name in ["rows", "points"] {
        let a = std::fs::read(dir.path().join(format!("{name}0.csv"))).unwrap();
        let b = std::fs::read(dir.path().join(format!("{name}1.csv"))).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "{name} differ between runs");
    }
}

#[test]
fn disutility_sweep_measures_against_on_the_spot() {
    let cal = tiny(4, 40, DelayScenario::Zero);
    let report = run_disutility_sweep(&cal, DelayScenario::Long, &[0.0, 0.5, 1.0], 1, &quick()).unwrap();
    let gain = |v: &str| report.row(v, SchemeFamily::Volume).unwrap().relative_gain.unwrap();
    let adopt = |v: &str| report.row(v, SchemeFamily::Volume).unwrap().adoption_fraction;
    assert!(gain("0") > 0.0 && adopt("0") > 0.0);
    assert!(gain("1").abs() < 1e-9 && adopt("1") == 0.0);
}

#[test]
fn summary_counts_failed_orderings_only() {
    let checks = vec![
        Check { id: "a".into(), kind: CheckKind::Ordering, passed: true, detail: "x".into() },
        Check { id: "b".into(), kind: CheckKind::Ordering, passed: false, detail: "y".into() },
        Check { id: "c".into(), kind: CheckKind::Band, passed: false, detail: "z".into() },
    ];
    let text = summary_text(&checks);
    assert!(text.contains("PASS [ordering] a: x"));
    assert!(text.contains("FAIL [band] c: z"));
    assert!(text.contains("orderings failed: 1; bands missed: 1"));
}
