use offload_core::mobility::{
    generate_cell_paths, generate_contacts, ContactModel, MobilityConfig, SyntheticCity,
};
use offload_core::scenario::Deadline;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[test]
fn uniform_city_slot_zero_occupancy_concentrates() {
    let cfg = MobilityConfig::uniform(31, 24);
    let n = 31_000;
    let paths = generate_cell_paths(&cfg, n, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
    let mut counts = [0usize; 31];
    for p in &paths {
        counts[p[0]] += 1;
    }
    let q: f64 = 1.0 / 31.0;
    let bound = 3.0 * (n as f64 * q * (1.0 - q)).sqrt();
    for c in counts {
        assert!((c as f64 - 1000.0).abs() <= bound, "count {c}");
    }
}

#[test]
fn occupancy_follows_attraction_chi_square() {
    let city = SyntheticCity::new(8);
    let cfg = city.build(24, 1.0).unwrap();
    let n = 2_000;
    let seeds = 20;
    let mut counts = vec![vec![0.0f64; 8]; 24];
    for seed in 0..seeds {
        let paths = generate_cell_paths(&cfg, n, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        for p in &paths {
            for (t, &s) in p.iter().enumerate() {
                assert!(s < 8);
                counts[t][s] += 1.0;
            }
        }
    }
    let total = (n * seeds as usize) as f64;
    // One test per slot at 1% overall significance.
    let critical = ChiSquared::new(7.0).unwrap().inverse_cdf(1.0 - 0.01 / 24.0);
    for t in 0..24 {
        let expected: Vec<f64> = cfg.occupancy(t).iter().map(|q| q * total).collect();
        let stat: f64 = counts[t]
            .iter()
            .zip(&expected)
            .map(|(o, e)| (o - e).powi(2) / e)
            .sum();
        assert!(stat < critical, "slot {t}: chi2 {stat} >= {critical}");
    }
}

#[test]
fn office_cells_fill_by_day_and_empty_at_night() {
    let cfg = SyntheticCity::new(10).build(24, 1.0).unwrap();
    let office = 0..cfg.office_cells;
    let share = |t: usize| -> f64 { cfg.occupancy(t)[office.clone()].iter().sum() };
    assert!(share(14) > share(3));
    let paths = generate_cell_paths(&cfg, 5_000, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
    let at = |t: usize| paths.iter().filter(|p| p[t] < cfg.office_cells).count();
    assert!(at(14) > at(3));
}

#[test]
fn single_visit_paths_are_constant() {
    let mut cfg = MobilityConfig::uniform(5, 24);
    cfg.visited_bs_distribution = [(1usize, 1.0)].into();
    cfg.rebalance = false;
    let paths = generate_cell_paths(&cfg, 200, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    assert!(paths.iter().all(|p| p.iter().all(|&s| s == p[0])));
}

#[test]
fn contact_means_hit_targets() {
    let model = ContactModel {
        deadline_grid: vec![Deadline::minutes(10), Deadline::hours(6)],
        mean_contact: vec![0.7, 0.88],
        ..ContactModel::default()
    };
    let n = 100_000;
    let (contacts, diag) = generate_contacts(&model, n, 24, 1.0, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
    for (d, target) in [(Deadline::minutes(10), 0.7), (Deadline::hours(6), 0.88)] {
        let mean: f64 = contacts
            .iter()
            .map(|c| c.row(d).unwrap().iter().sum::<f64>() / 24.0)
            .sum::<f64>()
            / n as f64;
        assert!((mean / target - 1.0).abs() < 0.01, "deadline {d}: {mean}");
    }
    assert_eq!(diag.clamped, 0);
}

#[test]
fn on_the_spot_ratio_is_one_minus_contact() {
    let model = ContactModel {
        deadline_grid: vec![Deadline::ZERO],
        mean_contact: vec![0.65],
        heterogeneity: 0.0,
        ..ContactModel::default()
    };
    let (contacts, _) = generate_contacts(&model, 10, 24, 1.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    for c in contacts {
        let kappa: f64 = c.row(Deadline::ZERO).unwrap().iter().map(|e| 1.0 - e).sum::<f64>() / 24.0;
        assert!((kappa - 0.35).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn contacts_never_fall_with_deadline(seed in 0u64..1_000, h in 0.0f64..=1.0, boost in 1.0f64..2.0) {
        let model = ContactModel { heterogeneity: h, home_boost: boost, ..ContactModel::default() };
        let (contacts, _) = generate_contacts(&model, 50, 24, 1.0, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        for c in &contacts {
            for t in 0..24 {
                let mut last = 0.0;
                for d in c.deadlines() {
                    let e = c.get(*d, t).unwrap();
                    prop_assert!((0.0..=1.0).contains(&e));
                    prop_assert!(e >= last);
                    last = e;
                }
            }
        }
    }

    #[test]
    fn paths_use_valid_cells(seed in 0u64..1_000, cells in 1usize..20) {
        let cfg = SyntheticCity::new(cells).build(24, 1.0).unwrap();
        let paths = generate_cell_paths(&cfg, 100, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert!(paths.iter().all(|p| p.len() == 24 && p.iter().all(|&s| s < cells)));
    }
}
