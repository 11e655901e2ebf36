mod common;

use common::{population, tiny};
use offload_core::pricing::{PriceMatrix, PricingScheme};
use offload_core::DelayScenario;
use proptest::prelude::*;

fn traffic() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..50.0, 24)
}

fn path() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0usize..4, 24)
}

#[test]
fn payment_examples() {
    let tt = PricingScheme::TwoTier { fee1: 20.0, fee2: 50.0, cap1: 5.0 };
    assert_eq!(tt.payment(&[0.0, 0.0], &[0, 0]).unwrap(), 0.0);
    assert_eq!(tt.payment(&[2.0, 3.0], &[0, 0]).unwrap(), 20.0);
    assert_eq!(tt.payment(&[2.0, 3.5], &[0, 0]).unwrap(), 50.0);
    let v = PricingScheme::Volume { unit_price: 2.0 };
    assert_eq!(v.payment(&[1.0, 3.0], &[0, 0]).unwrap(), 8.0);
    assert!(v.payment(&[1.0, -1.0], &[0, 0]).is_err());
}

#[test]
fn invalid_schemes_are_rejected() {
    assert!(PricingScheme::Flat { fee: -1.0 }.validate().is_err());
    assert!(PricingScheme::Volume { unit_price: f64::NAN }.validate().is_err());
    assert!(PricingScheme::TwoTier { fee1: 5.0, fee2: 4.0, cap1: 1.0 }.validate().is_err());
    assert!(PricingScheme::TwoTier { fee1: 1.0, fee2: 4.0, cap1: 0.0 }.validate().is_err());
    assert!(PriceMatrix::new(vec![vec![1.0, -0.1]]).is_err());
}

#[test]
fn congestion_charges_the_transmission_cell() {
    let prices = PriceMatrix::new(vec![vec![1.0, 3.0], vec![2.0, 5.0]]).unwrap();
    let c = PricingScheme::Congestion { unit_price: prices };
    assert_eq!(c.payment(&[1.0, 2.0], &[1, 0]).unwrap(), 3.0 + 4.0);
}

#[test]
fn unlimited_tier_one_matches_flat_on_a_population() {
    let cal = tiny(4, 50, DelayScenario::Medium);
    let pop = population(&cal, 3);
    let theta = cal.model.theta;
    for fee in [0.0, 1.0, 5.0, 20.0] {
        let flat = PricingScheme::Flat { fee };
        let tt = PricingScheme::TwoTier { fee1: fee, fee2: fee * 2.0 + 1.0, cap1: f64::INFINITY };
        for p in pop.profiles.iter() {
            let a = offload_core::user_response::respond(p, &flat, theta).unwrap();
            let b = offload_core::user_response::respond(p, &tt, theta).unwrap();
            assert_eq!(a.subscribed, b.subscribed);
            assert_eq!(a.x, b.x);
            if a.subscribed {
                assert_eq!(a.payment, b.payment);
            }
        }
    }
}

proptest! {
    #[test]
    fn metered_payments_grow_with_traffic(
        y in traffic(),
        bump in traffic(),
        cells in path(),
        p in 0.0f64..5.0,
        matrix in prop::collection::vec(prop::collection::vec(0.0f64..5.0, 4), 24),
    ) {
        let more: Vec<f64> = y.iter().zip(&bump).map(|(a, b)| a + b).collect();
        let schemes = [
            PricingScheme::Volume { unit_price: p },
            PricingScheme::Congestion { unit_price: PriceMatrix::new(matrix).unwrap() },
        ];
        for s in schemes {
            prop_assert!(s.payment(&more, &cells).unwrap() >= s.payment(&y, &cells).unwrap());
        }
    }

    #[test]
    fn constant_congestion_is_volume(y in traffic(), cells in path(), p in 0.0f64..5.0) {
        let v = PricingScheme::Volume { unit_price: p }.payment(&y, &cells).unwrap();
        let m = PriceMatrix::constant(24, 4, p).unwrap();
        let c = PricingScheme::Congestion { unit_price: m }.payment(&y, &cells).unwrap();
        prop_assert!((v - c).abs() <= 1e-12 * v.max(1.0));
    }

    #[test]
    fn infinite_cap_two_tier_is_flat(y in traffic(), fee in 0.0f64..50.0) {
        let tt = PricingScheme::TwoTier { fee1: fee, fee2: fee + 1.0, cap1: f64::INFINITY };
        let paid = tt.payment(&y, &[0; 24]).unwrap();
        if y.iter().sum::<f64>() > 0.0 {
            prop_assert_eq!(paid, fee);
        } else {
            prop_assert_eq!(paid, 0.0);
        }
    }
}
