mod common;

use common::{hand_user, population, tiny};
use offload_core::experiments::Calibration;
use offload_core::market::{aggregate, cell_load_variance, evaluate, MarketOutcome};
use offload_core::pricing::{PriceMatrix, PricingScheme};
use offload_core::user_response::respond;
use offload_core::{Deadline, DelayScenario, MarketParams};
use proptest::prelude::*;

fn identity_violations(o: &MarketOutcome) -> Vec<String> {
    let mut bad = Vec::new();
    if !(o.kappa_peak <= o.kappa_avg + 1e-15 && o.kappa_avg <= 1.0 + 1e-12) {
        bad.push(format!("kappa order {} {}", o.kappa_peak, o.kappa_avg));
    }
    let w = o.surplus + o.revenue;
    if (o.welfare - w).abs() > 1e-6 * o.welfare.abs().max(1.0) {
        bad.push(format!("welfare {} vs {}", o.welfare, w));
    }
    for (t, row) in o.cell_load.iter().enumerate() {
        let s: f64 = row.iter().sum();
        if (s - o.total_y[t]).abs() > 1e-9 * o.total_y[t].max(1.0) {
            bad.push(format!("slot {t} cell loads"));
        }
    }
    let x: f64 = o.total_x.iter().sum();
    let y: f64 = o.total_y.iter().sum();
    if x > 0.0 && (o.kappa_avg - y / x).abs() > 1e-9 {
        bad.push("kappa_avg".into());
    }
    bad
}

#[test]
fn no_subscribers_is_infeasible() {
    let cal = tiny(2, 20, DelayScenario::Zero);
    let pop = population(&cal, 0);
    let o = evaluate(&pop.profiles, &PricingScheme::Flat { fee: 1e9 }, &cal.market_params()).unwrap();
    assert_eq!(o.subscribers, 0);
    assert!(!o.feasible && o.no_traffic);
    assert_eq!((o.revenue, o.kappa_avg, o.kappa_peak), (0.0, 0.0, 0.0));
    assert!(o.total_x.iter().all(|&v| v == 0.0));
}

#[test]
fn no_contacts_means_everything_on_3g() {
    let users: Vec<_> = (0..5)
        .map(|i| hand_user(1.0 + i as f64, vec![0.5, 0.5], vec![1.0, 2.0], &[(Deadline::ZERO, 1.0)], vec![vec![0.0, 0.0]], vec![i % 2, 0]))
        .collect();
    let params = MarketParams { num_cells: 2, capacity_per_cell: f64::INFINITY, eta: 0.01, theta: 0.5 };
    let o = evaluate(&users, &PricingScheme::Flat { fee: 0.0 }, &params).unwrap();
    assert!((o.kappa_avg - 1.0).abs() < 1e-12);
    assert!(identity_violations(&o).is_empty());
}

#[test]
fn aggregate_matches_parallel_evaluate() {
    let cal = tiny(4, 300, DelayScenario::Medium);
    let pop = population(&cal, 9);
    let params = cal.market_params();
    let scheme = PricingScheme::Volume { unit_price: 0.05 };
    let responses: Vec<_> = pop.profiles.iter().map(|p| respond(p, &scheme, params.theta).unwrap()).collect();
    let a = aggregate(&responses, &pop.profiles, &params).unwrap();
    let b = evaluate(&pop.profiles, &scheme, &params).unwrap();
    assert!((a.revenue - b.revenue).abs() <= 1e-9 * a.revenue.abs());
    assert!((a.kappa_peak - b.kappa_peak).abs() <= 1e-12);
    assert!(aggregate(&responses[1..], &pop.profiles, &params).is_err());
}

#[test]
fn variance_examples() {
    let mut o = evaluate(
        &population(&tiny(2, 10, DelayScenario::Zero), 0).profiles,
        &PricingScheme::Flat { fee: 0.0 },
        &tiny(2, 10, DelayScenario::Zero).market_params(),
    )
    .unwrap();
    let c = o.capacity_per_cell;
    o.cell_load = vec![vec![3.0, 3.0], vec![0.0, 2.0 * c]];
    let v = cell_load_variance(&o).unwrap();
    assert_eq!(v[0], 0.0);
    assert!((v[1] - 1.0).abs() < 1e-12);
    o.capacity_per_cell = f64::INFINITY;
    assert!(cell_load_variance(&o).is_err());
}

#[test]
fn constant_congestion_outcome_equals_volume() {
    let cal = tiny(4, 200, DelayScenario::Long);
    let pop = population(&cal, 4);
    let params = cal.market_params();
    let v = evaluate(&pop.profiles, &PricingScheme::Volume { unit_price: 0.06 }, &params).unwrap();
    let m = PriceMatrix::constant(24, 4, 0.06).unwrap();
    let c = evaluate(&pop.profiles, &PricingScheme::Congestion { unit_price: m }, &params).unwrap();
    for (a, b) in [(v.revenue, c.revenue), (v.surplus, c.surplus), (v.kappa_peak, c.kappa_peak), (v.welfare, c.welfare)] {
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{a} vs {b}");
    }
    assert_eq!(v.subscribers, c.subscribers);
}

/// Offloading ratios of the full-scale calibration at a zero flat fee, which
/// reflect the mobility and contact model alone.
#[test]
fn full_scale_offloading_ratios() {
    let targets = [
        (DelayScenario::Zero, 0.44, 0.0044),
        (DelayScenario::Short, 0.28, 0.0026),
        (DelayScenario::Medium, 0.23, 0.0020),
        (DelayScenario::Long, 0.15, 0.0013),
    ];
    let base = offload_core::experiments::Population::generate(&Calibration::paper(), 0).unwrap();
    let params = Calibration::paper().market_params();
    for (s, avg, peak) in targets {
        let pop = base.with_scenario(s).unwrap();
        let o = evaluate(&pop.profiles, &PricingScheme::Flat { fee: 0.0 }, &params).unwrap();
        assert!((o.kappa_avg / avg - 1.0).abs() < 0.2, "{s:?} kappa_avg {}", o.kappa_avg);
        assert!((o.kappa_peak / peak - 1.0).abs() < 0.2, "{s:?} kappa_peak {}", o.kappa_peak);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn outcome_identities_hold(
        seed in 0u64..500,
        scenario in prop::sample::select(DelayScenario::ALL.to_vec()),
        fee in 0.0f64..10.0,
        unit in 0.001f64..0.5,
        cap in 1.0f64..200.0,
        eta in 0.0f64..0.05,
    ) {
        let mut cal = tiny(3, 30, scenario);
        cal.model.eta = eta;
        let pop = population(&cal, seed);
        let params = cal.market_params();
        let schemes = [
            PricingScheme::Flat { fee },
            PricingScheme::Volume { unit_price: unit },
            PricingScheme::TwoTier { fee1: fee, fee2: fee * 2.0, cap1: cap },
            PricingScheme::Congestion { unit_price: PriceMatrix::constant(24, 3, unit).unwrap() },
        ];
        for s in &schemes {
            let o = evaluate(&pop.profiles, s, &params).unwrap();
            let bad = identity_violations(&o);
            prop_assert!(bad.is_empty(), "{:?}: {:?}", s.family(), bad);
        }
    }
}
