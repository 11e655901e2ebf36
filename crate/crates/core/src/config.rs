//! TOML run configuration. Every section is optional; missing values fall
//! back to the chosen scale preset. The schema is documented in
//! `docs/config.md` at the repository root.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::equilibrium::SolverOptions;
use crate::error::{config, Result};
use crate::experiments::calibration::{
    Calibration, DelayAssignment, MobilitySource, WillingnessMode,
};
use crate::experiments::report::SuiteOptions;
use crate::experiments::sweep::SweepSpec;
use crate::mobility::ContactModel;
use crate::pricing::SchemeFamily;
use crate::scenario::{ClassMix, DelayScenario, DemandDistribution, RaisedCosine};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Scale preset: `desk`, `paper` or `congested`.
    pub scale: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub model: ModelSection,
    pub demand: DemandSection,
    pub population: PopulationSection,
    pub city: CitySection,
    pub contacts: Option<ContactModel>,
    pub solver: SolverOptions,
    pub solve: SolveSection,
    pub sweep: Vec<SweepSpec>,
    pub suite: SuiteSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub num_cells: Option<usize>,
    pub users_per_cell: Option<usize>,
    /// MB per slot per cell; `inf` disables the constraint.
    pub capacity_per_cell: Option<f64>,
    pub theta: Option<f64>,
    pub eta: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DemandSection {
    pub mean_mb_per_day: Option<f64>,
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PopulationSection {
    /// Every user on this scenario. Exclusive with `mix`.
    pub scenario: Option<DelayScenario>,
    /// Share of users per scenario.
    pub mix: Option<BTreeMap<DelayScenario, f64>>,
    pub willingness: Option<WillingnessMode>,
    pub disutility_factor: Option<f64>,
    pub class_mix: Option<ClassMix>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CitySection {
    pub office_fraction: Option<f64>,
    pub size_spread: Option<f64>,
    pub office: Option<RaisedCosine>,
    pub residential: Option<RaisedCosine>,
    pub visited_bs_distribution: Option<BTreeMap<usize, f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveSection {
    pub families: Vec<SchemeFamily>,
}

impl Default for SolveSection {
    fn default() -> Self {
        Self {
            families: SchemeFamily::ALL.to_vec(),
        }
    }
}

/// Figure-suite settings; the solver comes from `[solver]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteSection {
    pub repetitions: Option<usize>,
    pub disutility_factors: Option<Vec<f64>>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn suite_options(&self) -> SuiteOptions {
        let d = SuiteOptions::default();
        SuiteOptions {
            repetitions: self.suite.repetitions.unwrap_or(d.repetitions),
            disutility_factors: self.suite.disutility_factors.clone().unwrap_or(d.disutility_factors),
            solver: self.solver.clone(),
        }
    }

    /// The preset named by `scale_override`, else by the file, else `desk`,
    /// with the file's overrides applied.
    pub fn calibration(&self, scale_override: Option<&str>) -> Result<Calibration> {
        let scale = scale_override.or(self.scale.as_deref()).unwrap_or("desk");
        let mut cal = Calibration::preset(scale)?;
        let m = &self.model;
        if let Some(v) = m.num_cells {
            cal.model.num_cells = v;
        }
        if let Some(v) = m.users_per_cell {
            cal.model.users_per_cell = v;
        }
        if let Some(v) = m.capacity_per_cell {
            cal.model.capacity_per_cell = v;
        }
        if let Some(v) = m.theta {
            cal.model.theta = v;
        }
        if let Some(v) = m.eta {
            cal.model.eta = v;
        }
        if self.demand.mean_mb_per_day.is_some() || self.demand.sigma.is_some() {
            let sigma = self.demand.sigma.unwrap_or(cal.demand.sigma);
            let mean = self.demand.mean_mb_per_day.unwrap_or(cal.demand.mean());
            cal.demand = DemandDistribution::with_mean(sigma, mean)?;
        }
        let p = &self.population;
        match (&p.scenario, &p.mix) {
            (Some(_), Some(_)) => return Err(config("population: give either scenario or mix")),
            (Some(s), None) => cal.delay = DelayAssignment::Scenario(*s),
            (None, Some(mix)) => cal.delay = DelayAssignment::Mix(mix.clone()),
            (None, None) => {}
        }
        if let Some(w) = p.willingness {
            cal.willingness = w;
        }
        if let Some(f) = p.disutility_factor {
            cal.disutility_factor = f;
        }
        if let Some(c) = p.class_mix {
            cal.class_mix = c;
        }
        if let MobilitySource::Synthetic(city) = &mut cal.mobility {
            let c = &self.city;
            city.num_cells = cal.model.num_cells;
            if let Some(v) = c.office_fraction {
                city.office_fraction = v;
            }
            if let Some(v) = c.size_spread {
                city.size_spread = v;
            }
            if let Some(v) = c.office {
                city.shapes.office = v;
            }
            if let Some(v) = c.residential {
                city.shapes.residential = v;
            }
            if let Some(v) = &c.visited_bs_distribution {
                city.visited_bs_distribution = v.clone();
            }
        }
        if let Some(c) = &self.contacts {
            cal.contacts = c.clone();
        }
        if let Some(seed) = self.seed {
            cal.model.rng_seed = seed;
        }
        cal.validate()?;
        Ok(cal)
    }
}
