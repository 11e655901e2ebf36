//! Calibrated scenario presets and population synthesis.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::market::MarketParams;
use crate::mobility::{
    generate_cell_paths, generate_contacts, ContactDiagnostics, ContactMatrix, ContactModel,
    MobilityConfig, SyntheticCity,
};
use crate::scenario::{
    build_delay_profile, build_temporal_weights, scaled_willingness, ClassMix, DelayProfile,
    DelayScenario, DemandDistribution, ModelConfig, UserParts, UserProfile, DAYS_PER_MONTH,
};

/// Projected average monthly demand, in MB.
pub const MONTHLY_DEMAND_MB: f64 = 1300.0;
/// Demand power-law exponent.
pub const DEMAND_SIGMA: f64 = 0.57;
/// 3G cell capacity per one-hour slot, in MB.
pub const CAPACITY_3G_MB: f64 = 3600.0;
/// Upgraded (4G) cell capacity per one-hour slot, in MB.
pub const CAPACITY_4G_MB: f64 = 14400.0;

/// Capacity factor of the congested preset.
pub const CONGESTED_CAPACITY_SCALE: f64 = 0.15;

/// Independent random streams derived from one seed.
#[derive(Debug, Clone, Copy)]
#[repr(u64)]
enum Stream {
    Demand = 1,
    Willingness = 2,
    Paths = 3,
    Contacts = 4,
    DelayMix = 5,
}

fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// How each user's delay profile is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayAssignment {
    /// Everybody follows one named scenario.
    Scenario(DelayScenario),
    /// Each user follows a scenario drawn with the given probabilities.
    Mix(BTreeMap<DelayScenario, f64>),
    /// Everybody uses this exact profile.
    Explicit(DelayProfile),
}

/// How the willingness scale `nu` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WillingnessMode {
    /// `nu` uniform on (0, 1) per user.
    Random,
    /// `nu = 1` for everybody.
    Homogeneous,
}

/// Where cell paths come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MobilitySource {
    Synthetic(SyntheticCity),
    Explicit(MobilityConfig),
}

/// Everything needed to synthesize a population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Calibration {
    pub model: ModelConfig,
    pub demand: DemandDistribution,
    #[serde(default)]
    pub class_mix: ClassMix,
    pub delay: DelayAssignment,
    pub mobility: MobilitySource,
    #[serde(default)]
    pub contacts: ContactModel,
    pub willingness: WillingnessMode,
    #[serde(default)]
    pub disutility_factor: f64,
}

impl Calibration {
    /// 31 cells of 1000 users each, 24 one-hour slots, 43.3 MB/day mean demand.
    pub fn paper() -> Self {
        let model = ModelConfig::default();
        Self {
            demand: DemandDistribution::with_mean(DEMAND_SIGMA, MONTHLY_DEMAND_MB / DAYS_PER_MONTH)
                .expect("valid demand preset"),
            class_mix: ClassMix::default(),
            delay: DelayAssignment::Scenario(DelayScenario::Zero),
            mobility: MobilitySource::Synthetic(SyntheticCity::new(model.num_cells)),
            contacts: ContactModel::default(),
            willingness: WillingnessMode::Random,
            disutility_factor: 0.0,
            model,
        }
    }

    /// 8 cells of 200 users; capacity scaled with users per cell.
    pub fn desk() -> Self {
        let mut cal = Self::paper();
        cal.model.num_cells = 8;
        cal.model.users_per_cell = 200;
        cal.model.capacity_per_cell = CAPACITY_3G_MB * 200.0 / 1000.0;
        cal.mobility = MobilitySource::Synthetic(SyntheticCity::new(8));
        cal
    }

    /// Desk scale with reduced capacity, so the flat optimum is capacity-bound
    /// on every scenario.
    pub fn congested() -> Self {
        let mut cal = Self::desk();
        cal.model.capacity_per_cell *= CONGESTED_CAPACITY_SCALE;
        cal
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "paper" | "full" => Ok(Self::paper()),
            "desk" | "ci" => Ok(Self::desk()),
            "congested" => Ok(Self::congested()),
            other => Err(config(format!("unknown scale preset '{other}'"))),
        }
    }

    /// Capacity of an upgraded network at this scale.
    pub fn upgraded_capacity(&self) -> f64 {
        self.model.capacity_per_cell * CAPACITY_4G_MB / CAPACITY_3G_MB
    }

    pub fn market_params(&self) -> MarketParams {
        MarketParams::from(&self.model)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.demand.validate()?;
        self.class_mix.validate()?;
        self.contacts.validate()?;
        if !(0.0..=1.0).contains(&self.disutility_factor) {
            return Err(config("disutility_factor must lie in [0, 1]"));
        }
        if let DelayAssignment::Mix(m) = &self.delay {
            let total: f64 = m.values().sum();
            if (total - 1.0).abs() > 1e-9 || m.values().any(|v| *v < 0.0) {
                return Err(config("delay mix must be a probability distribution"));
            }
        }
        Ok(())
    }

    pub fn mobility_config(&self) -> Result<MobilityConfig> {
        let cfg = match &self.mobility {
            MobilitySource::Synthetic(city) => {
                let mut city = city.clone();
                city.num_cells = self.model.num_cells;
                city.build(self.model.num_slots, self.model.slot_hours)?
            }
            MobilitySource::Explicit(m) => m.clone(),
        };
        if cfg.num_cells != self.model.num_cells || cfg.num_slots() != self.model.num_slots {
            return Err(config("mobility dimensions do not match the model"));
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// A synthesized set of users together with the draws behind it.
#[derive(Debug, Clone)]
pub struct Population {
    pub profiles: Vec<UserProfile>,
    /// Willingness scale per user.
    pub nu: Vec<f64>,
    /// Delay scenario per user when profiles come from named scenarios.
    pub scenarios: Vec<Option<DelayScenario>>,
    pub mobility: MobilityConfig,
    pub contact_diagnostics: ContactDiagnostics,
    pub class_mix: ClassMix,
}

impl Population {
    /// Builds the population for `seed`. Each ingredient has its own random
    /// stream, so variants that change one ingredient share the rest.
    pub fn generate(cal: &Calibration, seed: u64) -> Result<Self> {
        cal.validate()?;
        let m = &cal.model;
        let n = m.num_users();
        let mobility = cal.mobility_config()?;
        let weights = build_temporal_weights(&mobility.usage_pattern())?;

        let demands = crate::scenario::sample_demands(&cal.demand, n, &mut stream_rng(seed, Stream::Demand))?;
        let nu: Vec<f64> = match cal.willingness {
            WillingnessMode::Homogeneous => vec![1.0; n],
            WillingnessMode::Random => {
                let mut rng = stream_rng(seed, Stream::Willingness);
                (0..n)
                    .map(|_| crate::scenario::build_willingness(&weights, m.theta, &mut rng).0)
                    .collect()
            }
        };
        let paths = generate_cell_paths(&mobility, n, &mut stream_rng(seed, Stream::Paths))?;
        let (contacts, diag) = generate_contacts(
            &cal.contacts,
            n,
            m.num_slots,
            m.slot_hours,
            &mut stream_rng(seed, Stream::Contacts),
        )?;
        let scenarios = assign_scenarios(&cal.delay, n, seed)?;
        let named: BTreeMap<DelayScenario, DelayProfile> = DelayScenario::ALL
            .iter()
            .map(|&s| Ok((s, build_delay_profile(s, &cal.class_mix)?)))
            .collect::<Result<_>>()?;

        let slot_minutes = m.slot_minutes();
        let profiles = (0..n)
            .into_par_iter()
            .map(|i| {
                let delay = match (&cal.delay, scenarios[i]) {
                    (DelayAssignment::Explicit(p), _) => p.clone(),
                    (_, Some(s)) => named[&s].clone(),
                    (_, None) => DelayProfile::on_the_spot(),
                };
                UserProfile::new(
                    UserParts {
                        daily_demand: demands[i],
                        temporal_weight: weights.clone(),
                        willingness: scaled_willingness(&weights, m.theta, nu[i]),
                        delay_profile: delay,
                        wifi_contact: contacts[i].clone(),
                        cell_path: paths[i].clone(),
                        disutility_factor: cal.disutility_factor,
                    },
                    slot_minutes,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            profiles,
            nu,
            scenarios,
            mobility,
            contact_diagnostics: diag,
            class_mix: cal.class_mix,
        })
    }

    /// Same users under a single named delay scenario.
    pub fn with_scenario(&self, scenario: DelayScenario) -> Result<Self> {
        let profile = build_delay_profile(scenario, &self.class_mix)?;
        let profiles = self
            .profiles
            .par_iter()
            .map(|p| p.with_delay_profile(profile.clone()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            profiles,
            scenarios: vec![Some(scenario); self.nu.len()],
            ..self.clone_without_profiles()
        })
    }

    /// Same users with scenarios drawn from `mix` (stream fixed by `seed`).
    pub fn with_mix(&self, mix: &BTreeMap<DelayScenario, f64>, seed: u64) -> Result<Self> {
        let scenarios = assign_scenarios(&DelayAssignment::Mix(mix.clone()), self.profiles.len(), seed)?;
        let named: BTreeMap<DelayScenario, DelayProfile> = DelayScenario::ALL
            .iter()
            .map(|&s| Ok((s, build_delay_profile(s, &self.class_mix)?)))
            .collect::<Result<_>>()?;
        let profiles = self
            .profiles
            .par_iter()
            .zip(&scenarios)
            .map(|(p, s)| p.with_delay_profile(named[&s.unwrap_or(DelayScenario::Zero)].clone()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            profiles,
            scenarios,
            ..self.clone_without_profiles()
        })
    }

    /// Same users with a delay disutility factor.
    pub fn with_disutility(&self, factor: f64) -> Result<Self> {
        let profiles = self
            .profiles
            .par_iter()
            .map(|p| p.with_disutility_factor(factor))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            profiles,
            scenarios: self.scenarios.clone(),
            ..self.clone_without_profiles()
        })
    }

    fn clone_without_profiles(&self) -> Self {
        Self {
            profiles: Vec::new(),
            nu: self.nu.clone(),
            scenarios: Vec::new(),
            mobility: self.mobility.clone(),
            contact_diagnostics: self.contact_diagnostics,
            class_mix: self.class_mix,
        }
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }
}

fn assign_scenarios(assign: &DelayAssignment, n: usize, seed: u64) -> Result<Vec<Option<DelayScenario>>> {
    Ok(match assign {
        DelayAssignment::Scenario(s) => vec![Some(*s); n],
        DelayAssignment::Explicit(_) => vec![None; n],
        DelayAssignment::Mix(mix) => {
            let keys: Vec<DelayScenario> = mix.keys().copied().collect();
            let picker = WeightedIndex::new(mix.values()).map_err(|e| config(format!("delay mix: {e}")))?;
            let mut rng = stream_rng(seed, Stream::DelayMix);
            (0..n).map(|_| Some(keys[picker.sample(&mut rng)])).collect()
        }
    })
}

/// A single cell of users that differ only in daily demand: willingness
/// `w(t)^(1 - theta)`, common temporal weights, and the same contact
/// probability at every slot. With `stratified`, the `i`-th demand is drawn
/// from the `i`-th of `n` equal-probability strata. Its `kappa_avg` is `1 - contact` and its
/// `kappa_peak` is `(1 - contact) * max_t w(t)`.
pub fn homogeneous_population(
    n: usize,
    demand: &DemandDistribution,
    weights: &[f64],
    contact: f64,
    theta: f64,
    seed: u64,
    stratified: bool,
) -> Result<Vec<UserProfile>> {
    let weights = build_temporal_weights(weights)?;
    let mut rng = stream_rng(seed, Stream::Demand);
    let demands = if stratified {
        crate::scenario::sample_demands_stratified(demand, n, &mut rng)?
    } else {
        crate::scenario::sample_demands(demand, n, &mut rng)?
    };
    let contacts = ContactMatrix::constant(vec![crate::scenario::Deadline::ZERO], weights.len(), contact)?;
    let willingness = scaled_willingness(&weights, theta, 1.0);
    demands
        .into_iter()
        .map(|phi| {
            UserProfile::new(
                UserParts {
                    daily_demand: phi,
                    temporal_weight: weights.clone(),
                    willingness: willingness.clone(),
                    delay_profile: DelayProfile::on_the_spot(),
                    wifi_contact: contacts.clone(),
                    cell_path: vec![0; weights.len()],
                    disutility_factor: 0.0,
                },
                60.0,
            )
        })
        .collect()
}
