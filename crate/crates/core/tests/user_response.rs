mod common;

use common::{hand_user, population, tiny};
use offload_core::pricing::{PriceMatrix, PricingScheme};
use offload_core::user_response::{
    cap_constrained_allocation, expected_3g, respond, respond_congestion, respond_flat,
    respond_two_tier, respond_volume, respond_with_disutility,
};
use offload_core::{Deadline, DelayScenario, UserProfile};
use proptest::prelude::*;

const H1: Deadline = Deadline(60);

fn single_slot(gamma: f64, phi: f64, kappa: f64) -> UserProfile {
    hand_user(phi, vec![1.0], vec![gamma], &[(Deadline::ZERO, 1.0)], vec![vec![1.0 - kappa]], vec![0])
}

#[test]
fn expected_3g_examples() {
    let x = vec![2.0; 4];
    let none = hand_user(8.0, vec![0.25; 4], vec![1.0; 4], &[(Deadline::ZERO, 1.0)], vec![vec![0.0; 4]], vec![0; 4]);
    assert_eq!(expected_3g(&x, &none), x);

    let all = hand_user(
        8.0,
        vec![0.25; 4],
        vec![1.0; 4],
        &[(Deadline::ZERO, 0.0), (H1, 1.0)],
        vec![vec![0.3; 4], vec![1.0; 4]],
        vec![0; 4],
    );
    assert!(expected_3g(&x, &all).iter().all(|&v| v == 0.0));

    let mixed = hand_user(
        8.0,
        vec![0.25; 4],
        vec![1.0; 4],
        &[(Deadline::ZERO, 0.3), (H1, 0.7)],
        vec![vec![0.5; 4], vec![0.9; 4]],
        vec![0; 4],
    );
    let y = expected_3g(&x, &mixed);
    let ratio = y.iter().sum::<f64>() / x.iter().sum::<f64>();
    assert!((ratio - 0.22).abs() < 1e-12);
}

#[test]
fn deferred_traffic_wraps_past_midnight() {
    let u = hand_user(2.0, vec![0.5, 0.5], vec![1.0, 1.0], &[(H1, 1.0)], vec![vec![0.0, 0.0]], vec![0, 0]);
    assert_eq!(expected_3g(&[1.0, 3.0], &u), vec![3.0, 1.0]);
}

#[test]
fn flat_examples() {
    let u = single_slot(1.0, 1.0, 1.0);
    let r = respond_flat(&u, 0.9, 0.5);
    assert!(r.subscribed);
    assert!((r.net_utility - 0.1).abs() < 1e-12);
    assert_eq!(r.x, vec![1.0]);
    let r = respond_flat(&u, 1.0, 0.5);
    assert!(!r.subscribed && r.x == vec![0.0] && r.payment == 0.0 && r.net_utility == 0.0);
    assert!(respond_flat(&single_slot(1.0, 1e-6, 1.0), 0.0, 0.5).subscribed);
}

#[test]
fn volume_examples() {
    assert!((respond_volume(&single_slot(1.0, 2.0, 1.0), 0.5, 0.5).x[0] - 1.0).abs() < 1e-12);
    assert_eq!(respond_volume(&single_slot(1.0, 0.8, 1.0), 0.5, 0.5).x[0], 0.8);
    let free = respond_volume(&single_slot(1.0, 3.0, 0.0), 0.5, 0.5);
    assert_eq!(free.x[0], 3.0);
    assert_eq!(free.payment, 0.0);
    let zero = respond_volume(&single_slot(1.0, 3.0, 1.0), 0.0, 0.5);
    assert_eq!((zero.x[0], zero.payment), (3.0, 0.0));
}

#[test]
fn tier_one_cap_binds_before_the_interior_optimum() {
    let u = single_slot(1.0, 4.0, 0.5);
    let plan = cap_constrained_allocation(&u, 1.0, 0.5);
    assert!((plan.x[0] - 2.0).abs() < 1e-9);
    let r = respond_two_tier(&u, 0.3, 5.0, 1.0, 0.5).unwrap();
    assert_eq!(r.tier, Some(1));
    assert!((r.net_utility - (2f64.sqrt() - 0.3)).abs() < 1e-9);
}

#[test]
fn slack_cap_picks_tier_one() {
    let u = single_slot(1.0, 4.0, 0.5);
    let r = respond_two_tier(&u, 0.3, 0.5, 10.0, 0.5).unwrap();
    assert_eq!((r.tier, r.x.clone(), r.payment), (Some(1), vec![4.0], 0.3));
}

#[test]
fn congestion_two_slot_deferral() {
    let u = hand_user(2.0, vec![0.5, 0.5], vec![1.0, 1.0], &[(H1, 1.0)], vec![vec![0.0, 0.0]], vec![0, 0]);
    let prices = PriceMatrix::new(vec![vec![1.0], vec![2.0]]).unwrap();
    let r = respond_congestion(&u, &prices, 0.5);
    // Slot 0 traffic pays 2 and slot 1 traffic pays 1: optima (0.5/2)^2 and (0.5/1)^2, both under the cap of 1.
    assert!((r.x[0] - 0.0625).abs() < 1e-12 && (r.x[1] - 0.25).abs() < 1e-12);
    assert!((r.payment - (2.0 * 0.0625 + 0.25)).abs() < 1e-12);
}

#[test]
fn on_the_spot_congestion_uses_own_slot_price() {
    let u = hand_user(2.0, vec![0.5, 0.5], vec![1.0, 1.0], &[(Deadline::ZERO, 1.0)], vec![vec![0.5, 0.0]], vec![1, 0]);
    let prices = PriceMatrix::new(vec![vec![9.0, 2.0], vec![1.0, 9.0]]).unwrap();
    let r = respond_congestion(&u, &prices, 0.5);
    assert!((r.x[0] - 0.25f64).abs() < 1e-12);
    assert!((r.x[1] - 0.25).abs() < 1e-12);
}

#[test]
fn disutility_extremes() {
    let cal = tiny(4, 100, DelayScenario::Long);
    let pop = population(&cal, 1);
    let theta = cal.model.theta;
    let price = 0.05;
    for p in pop.profiles.iter() {
        assert!(respond_with_disutility(p, price, 0.0, theta).adopts_delayed);
        let r = respond_with_disutility(p, price, 1.0, theta);
        if r.net_utility > 0.0 {
            assert!(!r.adopts_delayed);
        }
    }
    let off = pop.with_disutility(0.0).unwrap();
    for (a, b) in off.profiles.iter().zip(&pop.profiles) {
        let via_respond = respond(a, &PricingScheme::Volume { unit_price: price }, theta).unwrap();
        assert_eq!(via_respond.x, respond_volume(b, price, theta).x);
    }
}

#[test]
fn scheme_reductions_on_a_population() {
    let cal = tiny(4, 100, DelayScenario::Medium);
    let pop = population(&cal, 5);
    let theta = cal.model.theta;
    let constant = PriceMatrix::constant(24, 4, 0.07).unwrap();
    for p in pop.profiles.iter() {
        let v = respond_volume(p, 0.07, theta);
        let c = respond_congestion(p, &constant, theta);
        // Equal up to the order in which the per-slot cost is summed.
        for (a, b) in v.x.iter().zip(&c.x) {
            assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }
        assert!((v.payment - c.payment).abs() <= 1e-12 * v.payment.max(1.0));
        for fee in [0.5, 3.0] {
            let flat = respond_flat(p, fee, theta);
            let tt = respond_two_tier(p, fee, fee, 1.0, theta).unwrap();
            assert_eq!(flat.subscribed, tt.subscribed);
            assert!((flat.net_utility - tt.net_utility).abs() < 1e-12);
        }
    }
}

#[test]
fn higher_unit_price_never_raises_traffic() {
    let cal = tiny(4, 100, DelayScenario::Long);
    let pop = population(&cal, 2);
    let prices = offload_core::numeric::geomspace(1e-3, 10.0, 40);
    for p in pop.profiles.iter() {
        let mut last = respond_volume(p, prices[0], cal.model.theta).x;
        for &price in &prices[1..] {
            let x = respond_volume(p, price, cal.model.theta).x;
            assert!(x.iter().zip(&last).all(|(a, b)| a <= b));
            last = x;
        }
    }
}

fn response_invariants(p: &UserProfile, scheme: &PricingScheme, theta: f64) -> std::result::Result<(), TestCaseError> {
    let r = respond(p, scheme, theta).unwrap();
    let phi = p.slot_demands();
    for (x, cap) in r.x.iter().zip(&phi) {
        prop_assert!(*x >= 0.0 && *x <= cap * (1.0 + 1e-12));
    }
    prop_assert!(r.y.iter().all(|&y| y >= 0.0));
    prop_assert!(r.total_y() <= r.total_x() * (1.0 + 1e-12) + 1e-15);
    if !r.subscribed {
        prop_assert!(r.x.iter().all(|&x| x == 0.0));
        prop_assert!(r.payment == 0.0 && r.net_utility == 0.0);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn responses_respect_demand_and_offload(
        seed in 0u64..500,
        fee in 0.0f64..20.0,
        unit in 0.0f64..1.0,
        cap in 0.1f64..100.0,
        scenario in prop::sample::select(DelayScenario::ALL.to_vec()),
    ) {
        let cal = tiny(3, 20, scenario);
        let pop = population(&cal, seed);
        let schemes = [
            PricingScheme::Flat { fee },
            PricingScheme::Volume { unit_price: unit },
            PricingScheme::TwoTier { fee1: fee, fee2: fee * 1.5, cap1: cap },
            PricingScheme::Congestion { unit_price: PriceMatrix::constant(24, 3, unit).unwrap() },
        ];
        for p in pop.profiles.iter() {
            for s in &schemes {
                response_invariants(p, s, cal.model.theta)?;
            }
        }
    }
}
