#![allow(dead_code)]

use offload_core::experiments::{Calibration, DelayAssignment, Population};
use offload_core::{DelayScenario, UserProfile};

/// A small calibration for fast integration tests.
pub fn tiny(cells: usize, users: usize, scenario: DelayScenario) -> Calibration {
    let mut cal = Calibration::desk();
    cal.model.num_cells = cells;
    cal.model.users_per_cell = users;
    if let offload_core::experiments::MobilitySource::Synthetic(city) = &mut cal.mobility {
        city.num_cells = cells;
    }
    cal.delay = DelayAssignment::Scenario(scenario);
    cal
}

pub fn population(cal: &Calibration, seed: u64) -> Population {
    Population::generate(cal, seed).expect("population")
}

/// Checks every documented profile invariant from the raw fields and
/// returns the violations.
pub fn profile_violations(p: &UserProfile, num_cells: usize) -> Vec<String> {
    let mut bad = Vec::new();
    let w = p.temporal_weight();
    if w.iter().any(|&v| v < 0.0) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        bad.push("temporal weights".to_string());
    }
    if p.willingness().iter().any(|&g| g < 0.0) {
        bad.push("negative willingness".to_string());
    }
    let shares: f64 = p.delay_profile().shares().values().sum();
    if (shares - 1.0).abs() > 1e-9 {
        bad.push("delay shares".to_string());
    }
    let c = p.wifi_contact();
    for t in 0..p.num_slots() {
        let mut last = 0.0;
        for d in c.deadlines() {
            let e = c.get(*d, t).unwrap();
            if !(0.0..=1.0).contains(&e) || e < last {
                bad.push(format!("contact at slot {t}"));
            }
            last = e;
        }
    }
    let per_slot: f64 = p.slot_demands().iter().sum();
    if (per_slot - p.daily_demand()).abs() > 1e-9 * p.daily_demand().max(1.0) {
        bad.push("slot demands".to_string());
    }
    if p.cell_path().iter().any(|&s| s >= num_cells) || p.cell_path().len() != p.num_slots() {
        bad.push("cell path".to_string());
    }
    bad
}

/// A hand-built profile. `contacts` holds one row per deadline in `shares`,
/// in deadline order.
pub fn hand_user(
    demand: f64,
    weights: Vec<f64>,
    gamma: Vec<f64>,
    shares: &[(offload_core::Deadline, f64)],
    contacts: Vec<Vec<f64>>,
    path: Vec<usize>,
) -> UserProfile {
    use offload_core::scenario::UserParts;
    use offload_core::{ContactMatrix, DelayProfile};
    let deadlines: Vec<_> = shares.iter().map(|(d, _)| *d).collect();
    UserProfile::new(
        UserParts {
            daily_demand: demand,
            temporal_weight: weights,
            willingness: gamma,
            delay_profile: DelayProfile::new(shares.iter().copied().collect()).unwrap(),
            wifi_contact: ContactMatrix::new(deadlines, contacts).unwrap(),
            cell_path: path,
            disutility_factor: 0.0,
        },
        60.0,
    )
    .unwrap()
}
