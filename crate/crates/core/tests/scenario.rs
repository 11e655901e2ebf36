mod common;

use approx::assert_relative_eq;
use offload_core::experiments::{Calibration, Population};
use offload_core::scenario::{
    build_delay_profile, build_temporal_weights, sample_demands, sample_demands_stratified,
    scaled_willingness, ClassMix, Deadline, DelayScenario, DemandDistribution,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn demand_sample_mean_matches_truncated_power_law() {
    let dist = DemandDistribution::new(0.57, 100.0).unwrap();
    let xs = sample_demands(&dist, 1_000_000, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    // (1 - sigma) / (2 - sigma) = 0.43 / 1.43
    assert_relative_eq!(mean, 100.0 * 0.43 / 1.43, max_relative = 0.01);
    assert!(xs.iter().all(|&x| x > 0.0 && x <= 100.0));
}

#[test]
fn demand_sampler_passes_kolmogorov_smirnov() {
    let (sigma, phi_max) = (0.57, 7.0);
    let dist = DemandDistribution::new(sigma, phi_max).unwrap();
    let mut xs = sample_demands(&dist, 1_000_000, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let cdf = |x: f64| (x / phi_max).powf(1.0 - sigma);
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max((((i + 1) as f64) / n - f).abs())
        })
        .fold(0.0, f64::max);
    assert!(d < 0.01, "KS distance {d}");
}

#[test]
fn stratified_sampler_keeps_the_distribution() {
    let dist = DemandDistribution::new(0.57, 1.0).unwrap();
    let xs = sample_demands_stratified(&dist, 10_000, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    assert_relative_eq!(mean, 0.43 / 1.43, max_relative = 1e-3);
}

#[test]
fn monthly_demand_converts_to_daily_mean() {
    let cal = Calibration::paper();
    assert_relative_eq!(cal.demand.mean(), 1300.0 / 30.0, max_relative = 1e-12);
    assert_relative_eq!(cal.demand.quantile(1.0), cal.demand.phi_max);
}

#[test]
fn weight_and_willingness_examples() {
    assert_eq!(build_temporal_weights(&[700.0, 300.0]).unwrap(), vec![0.7, 0.3]);
    let uniform = build_temporal_weights(&[2.0; 24]).unwrap();
    assert!(uniform.iter().all(|&w| (w - 1.0 / 24.0).abs() < 1e-15));
    assert!(build_temporal_weights(&[0.0; 24]).is_err());
    assert_relative_eq!(scaled_willingness(&[0.25], 0.5, 1.0)[0], 0.5);
    assert_relative_eq!(scaled_willingness(&[0.04], 0.5, 0.5)[0], 0.1);
}

#[test]
fn long_scenario_aggregates_class_deadlines() {
    let p = build_delay_profile(DelayScenario::Long, &ClassMix::default()).unwrap();
    assert_relative_eq!(p.share(Deadline::hours(2)), 0.725, epsilon = 1e-12);
    assert_relative_eq!(p.share(Deadline::hours(6)), 0.209, epsilon = 1e-12);
    assert_relative_eq!(p.share(Deadline::ZERO), 0.066, epsilon = 1e-12);
    let zero = build_delay_profile(DelayScenario::Zero, &ClassMix::default()).unwrap();
    assert_eq!(zero.share(Deadline::ZERO), 1.0);
}

#[test]
fn hundred_thousand_users_satisfy_profile_invariants() {
    let mut cal = common::tiny(10, 10_000, DelayScenario::Medium);
    cal.delay = offload_core::experiments::DelayAssignment::Mix(
        DelayScenario::ALL.iter().map(|&s| (s, 0.25)).collect(),
    );
    let pop = common::population(&cal, 5);
    assert_eq!(pop.len(), 100_000);
    let bad: usize = pop
        .profiles
        .iter()
        .map(|p| common::profile_violations(p, 10).len())
        .sum();
    assert_eq!(bad, 0);
}

#[test]
fn population_is_reproducible_per_seed() {
    let cal = common::tiny(3, 50, DelayScenario::Long);
    let a = Population::generate(&cal, 9).unwrap();
    let b = Population::generate(&cal, 9).unwrap();
    let c = Population::generate(&cal, 10).unwrap();
    assert_eq!(a.profiles, b.profiles);
    assert_ne!(a.profiles, c.profiles);
}

proptest! {
    #[test]
    fn weights_sum_to_one(pattern in prop::collection::vec(0.0f64..1e6, 1..48)) {
        prop_assume!(pattern.iter().any(|&v| v > 0.0));
        let w = build_temporal_weights(&pattern).unwrap();
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(w.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn any_class_mix_gives_valid_profiles(
        a in 0.0f64..1.0, b in 0.0f64..1.0, c in 0.0f64..1.0, d in 0.0f64..1.0,
    ) {
        let total = a + b + c + d;
        prop_assume!(total > 1e-6);
        let mix = ClassMix { video: a / total, data: b / total, p2p: c / total, audio: 1.0 - (a + b + c) / total };
        prop_assume!(mix.audio >= 0.0);
        for s in DelayScenario::ALL {
            let p = build_delay_profile(s, &mix).unwrap();
            let sum: f64 = p.shares().values().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn quantile_inverts_cdf(sigma in 0.05f64..0.95, u in 0.0f64..1.0) {
        let dist = DemandDistribution::new(sigma, 3.0).unwrap();
        let x = dist.quantile(u);
        prop_assert!((dist.cdf(x) - u).abs() < 1e-9);
    }
}
