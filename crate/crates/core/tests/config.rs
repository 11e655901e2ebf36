use offload_core::config::RunConfig;
use offload_core::experiments::{DelayAssignment, MobilitySource, SweepAxis};
use offload_core::DelayScenario;

#[test]
fn empty_file_gives_desk_preset() {
    let cfg = RunConfig::from_toml("").unwrap();
    let cal = cfg.calibration(None).unwrap();
    assert_eq!(cal, offload_core::experiments::Calibration::desk());
}

#[test]
fn overrides_reach_the_calibration() {
    let text = r#"
scale = "desk"
seed = 7

[model]
num_cells = 4
capacity_per_cell = 500.0

[demand]
mean_mb_per_day = 20.0

[population.mix]
zero = 0.5
long = 0.5

[city]
size_spread = 5.0
visited_bs_distribution = { 1 = 0.5, 2 = 0.5 }

[contacts]
heterogeneity = 0.0

[[sweep]]
axis = "demand_mean"
values = [10.0, 20.0]
"#;
    let cfg = RunConfig::from_toml(text).unwrap();
    let cal = cfg.calibration(None).unwrap();
    assert_eq!(cal.model.num_cells, 4);
    assert_eq!(cal.model.rng_seed, 7);
    assert_eq!(cal.model.capacity_per_cell, 500.0);
    assert!((cal.demand.mean() - 20.0).abs() < 1e-9);
    match &cal.delay {
        DelayAssignment::Mix(m) => assert_eq!(m[&DelayScenario::Long], 0.5),
        other => panic!("unexpected {other:?}"),
    }
    match &cal.mobility {
        MobilitySource::Synthetic(c) => {
            assert_eq!(c.num_cells, 4);
            assert_eq!(c.size_spread, 5.0);
            assert_eq!(c.visited_bs_distribution.len(), 2);
        }
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(cal.contacts.heterogeneity, 0.0);
    assert_eq!(cfg.sweep[0].axis, SweepAxis::DemandMean);
}

#[test]
fn unknown_keys_and_conflicts_are_rejected() {
    assert!(RunConfig::from_toml("bogus = 1").is_err());
    assert!(RunConfig::from_toml("[model]\nthetta = 0.5").is_err());
    let both = "[population]\nscenario = \"long\"\n[population.mix]\nzero = 1.0\n";
    let cfg = RunConfig::from_toml(both).unwrap();
    assert!(cfg.calibration(None).is_err());
}

#[test]
fn scale_flag_wins_over_file() {
    let cfg = RunConfig::from_toml("scale = \"desk\"").unwrap();
    let cal = cfg.calibration(Some("congested")).unwrap();
    assert_eq!(cal, offload_core::experiments::Calibration::congested());
    assert!(cfg.calibration(Some("huge")).is_err());
}
