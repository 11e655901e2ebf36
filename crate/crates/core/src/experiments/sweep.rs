//! Paired sweeps. Every variant of a seed reuses that seed's sampled users, so
//! gains against the baseline are free of sampling noise between variants.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::calibration::{Calibration, Population};
use crate::equilibrium::{solve_numeric, EquilibriumResult, Saturation, SolverOptions};
use crate::error::{config, Result};
use crate::market::{cell_load_variance, MarketParams};
use crate::pricing::{PricingScheme, SchemeFamily};
use crate::scenario::{DelayScenario, DemandDistribution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    DelayScenario,
    DemandMean,
    Capacity,
    Scheme,
    Mix,
    Disutility,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::DelayScenario => "delay_scenario",
            SweepAxis::DemandMean => "demand_mean",
            SweepAxis::Capacity => "capacity",
            SweepAxis::Scheme => "scheme",
            SweepAxis::Mix => "mix",
            SweepAxis::Disutility => "disutility",
        }
    }
}

/// One coordinate on a sweep axis: a number (demand in MB/day, capacity in
/// MB per slot, disutility factor), a name (scenario or tariff family) or a
/// scenario mix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisValue {
    Number(f64),
    Name(String),
    Mix(BTreeMap<DelayScenario, f64>),
}

impl AxisValue {
    pub fn label(&self) -> String {
        match self {
            AxisValue::Number(v) => v.to_string(),
            AxisValue::Name(s) => s.clone(),
            AxisValue::Mix(m) => m
                .iter()
                .map(|(s, w)| format!("{}={w}", s.name()))
                .collect::<Vec<_>>()
                .join(";"),
        }
    }

    fn number(&self) -> Result<f64> {
        match self {
            AxisValue::Number(v) => Ok(*v),
            other => Err(config(format!("expected a number, got '{}'", other.label()))),
        }
    }

    fn scenario(&self) -> Result<DelayScenario> {
        match self {
            AxisValue::Name(s) => s.parse(),
            other => Err(config(format!("expected a delay scenario, got '{}'", other.label()))),
        }
    }

    fn family(&self) -> Result<SchemeFamily> {
        match self {
            AxisValue::Name(s) => s.parse(),
            other => Err(config(format!("expected a tariff family, got '{}'", other.label()))),
        }
    }

    fn mix(&self) -> Result<&BTreeMap<DelayScenario, f64>> {
        match self {
            AxisValue::Mix(m) => Ok(m),
            other => Err(config(format!("expected a scenario mix, got '{}'", other.label()))),
        }
    }
}

/// What relative gains are measured against.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    /// The same sweep evaluated at this axis value.
    Value(AxisValue),
    /// Every user on the zero scenario without disutility, other settings kept.
    OnTheSpot,
    /// No gains are computed.
    #[default]
    None,
}

fn default_families() -> Vec<SchemeFamily> {
    vec![SchemeFamily::Flat, SchemeFamily::Volume]
}

fn default_repetitions() -> usize {
    1
}

fn default_first_seed() -> u64 {
    1
}

fn default_scenario() -> DelayScenario {
    DelayScenario::Zero
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<AxisValue>,
    /// Tariff families solved at each point (ignored on the scheme axis).
    #[serde(default = "default_families")]
    pub families: Vec<SchemeFamily>,
    /// Scenario used when the axis is neither the scenario nor the mix.
    #[serde(default = "default_scenario")]
    pub scenario: DelayScenario,
    #[serde(default)]
    pub baseline: Baseline,
    /// Number of seeds, starting at `first_seed`.
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default = "default_first_seed")]
    pub first_seed: u64,
}

impl SweepSpec {
    /// Scenario sweep over zero, short, medium and long against zero, from seed 1.
    pub fn scenarios(families: Vec<SchemeFamily>, repetitions: usize) -> Self {
        Self {
            axis: SweepAxis::DelayScenario,
            values: DelayScenario::ALL
                .iter()
                .map(|s| AxisValue::Name(s.name().into()))
                .collect(),
            families,
            scenario: DelayScenario::Zero,
            baseline: Baseline::Value(AxisValue::Name(DelayScenario::Zero.name().into())),
            repetitions,
            first_seed: 1,
        }
    }

    pub fn starting_at(mut self, first_seed: u64) -> Self {
        self.first_seed = first_seed;
        self
    }

    pub fn seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.repetitions as u64).map(move |k| self.first_seed + k)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(config("sweep needs at least one value"));
        }
        if self.repetitions == 0 {
            return Err(config("sweep needs at least one repetition"));
        }
        if self.axis != SweepAxis::Scheme && self.families.is_empty() {
            return Err(config("sweep needs at least one tariff family"));
        }
        let mut all = self.values.clone();
        if let Baseline::Value(v) = &self.baseline {
            all.push(v.clone());
        }
        for v in &all {
            match self.axis {
                SweepAxis::DelayScenario => {
                    v.scenario()?;
                }
                SweepAxis::Scheme => {
                    v.family()?;
                }
                SweepAxis::Mix => {
                    let m = v.mix()?;
                    let total: f64 = m.values().sum();
                    if (total - 1.0).abs() > 1e-9 || m.values().any(|w| *w < 0.0) {
                        return Err(config(format!("mix '{}' is not a distribution", v.label())));
                    }
                }
                SweepAxis::DemandMean | SweepAxis::Capacity => {
                    if !(v.number()? > 0.0) {
                        return Err(config(format!("{} must be positive", self.axis.name())));
                    }
                }
                SweepAxis::Disutility => {
                    if !(0.0..=1.0).contains(&v.number()?) {
                        return Err(config("disutility factor must lie in [0, 1]"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Solver result of one (value, family, seed).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointResult {
    pub value: String,
    pub family: SchemeFamily,
    pub seed: u64,
    pub feasible: bool,
    pub saturation: Saturation,
    pub revenue: f64,
    pub surplus: f64,
    pub welfare: f64,
    pub subscription_ratio: f64,
    pub adoption_fraction: f64,
    pub payment_per_unit_traffic: f64,
    /// Flat fee, volume unit price, two-tier lower fee or mean congestion price.
    pub price: f64,
    pub kappa_avg: f64,
    pub kappa_peak: f64,
    pub baseline_revenue: Option<f64>,
    pub relative_gain: Option<f64>,
    #[serde(skip)]
    pub variance: Option<Vec<f64>>,
}

/// Seed-averaged summary of one (value, family).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub value: String,
    pub family: SchemeFamily,
    pub seeds: usize,
    pub infeasible_seeds: usize,
    pub saturated_seeds: usize,
    pub revenue: f64,
    pub revenue_sd: f64,
    pub baseline_revenue: Option<f64>,
    /// Gain of the mean revenue over the mean baseline revenue.
    pub relative_gain: Option<f64>,
    /// Spread of the per-seed gains.
    pub relative_gain_sd: Option<f64>,
    pub surplus: f64,
    pub welfare: f64,
    pub subscription_ratio: f64,
    pub adoption_fraction: f64,
    pub payment_per_unit_traffic: f64,
    pub price: f64,
    pub kappa_avg: f64,
    pub kappa_peak: f64,
}

/// Seed-averaged per-slot cell-load variance of one (value, family).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceSeries {
    pub value: String,
    pub family: SchemeFamily,
    pub per_slot: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub axis: SweepAxis,
    pub rows: Vec<ComparisonRow>,
    pub points: Vec<PointResult>,
    pub variance: Vec<VarianceSeries>,
}

/// Gain of `value` over `baseline`; undefined unless the baseline is positive.
pub fn relative_gain(value: f64, baseline: f64) -> Option<f64> {
    (baseline > 0.0).then(|| (value - baseline) / baseline)
}

impl ComparisonReport {
    pub fn row(&self, value: &str, family: SchemeFamily) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.value == value && r.family == family)
    }

    pub fn variance(&self, value: &str, family: SchemeFamily) -> Option<&VarianceSeries> {
        self.variance.iter().find(|r| r.value == value && r.family == family)
    }

    /// Mean revenue gain of family `a` over family `b` at `value`, computed
    /// on seed-averaged revenues.
    pub fn family_gain(&self, value: &str, a: SchemeFamily, b: SchemeFamily) -> Option<f64> {
        relative_gain(self.row(value, a)?.revenue, self.row(value, b)?.revenue)
    }

    /// Writes the seed-averaged rows. The axis is named by the file, not a column.
    pub fn write_rows(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes one line per (value, family, seed).
    pub fn write_points(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for p in &self.points {
            w.serialize(p)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `value, family, slot, variance` lines.
    pub fn write_variance(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["value", "family", "slot", "variance"])?;
        for s in &self.variance {
            for (t, v) in s.per_slot.iter().enumerate() {
                w.write_record([s.value.clone(), s.family.name().to_string(), t.to_string(), v.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// A concrete market to solve.
struct Variant {
    population: Population,
    params: MarketParams,
}

fn headline_price(result: &EquilibriumResult) -> f64 {
    match &result.scheme_at_optimum {
        Some(PricingScheme::Flat { fee }) => *fee,
        Some(PricingScheme::Volume { unit_price }) => *unit_price,
        Some(PricingScheme::TwoTier { fee1, .. }) => *fee1,
        Some(PricingScheme::Congestion { unit_price }) => {
            let rows = unit_price.rows();
            let n: usize = rows.iter().map(Vec::len).sum();
            rows.iter().flatten().sum::<f64>() / n.max(1) as f64
        }
        None => 0.0,
    }
}

struct Sweeper<'a> {
    cal: &'a Calibration,
    spec: &'a SweepSpec,
    opts: &'a SolverOptions,
}

impl Sweeper<'_> {
    /// Builds the market for an axis value; `None` means the on-the-spot baseline.
    fn variant(&self, base: &Population, value: Option<&AxisValue>, seed: u64) -> Result<Variant> {
        let mut params = self.cal.market_params();
        let fixed = |pop: &Population| pop.with_scenario(self.spec.scenario);
        let population = match (self.spec.axis, value) {
            (_, None) => base.with_scenario(DelayScenario::Zero)?,
            (SweepAxis::DelayScenario, Some(v)) => base.with_scenario(v.scenario()?)?,
            (SweepAxis::Mix, Some(v)) => base.with_mix(v.mix()?, seed)?,
            (SweepAxis::Capacity, Some(v)) => {
                params.capacity_per_cell = v.number()?;
                fixed(base)?
            }
            (SweepAxis::DemandMean, Some(v)) => {
                let mut cal = self.cal.clone();
                cal.demand = DemandDistribution::with_mean(cal.demand.sigma, v.number()?)?;
                fixed(&Population::generate(&cal, seed)?)?
            }
            (SweepAxis::Disutility, Some(v)) => fixed(base)?.with_disutility(v.number()?)?,
            (SweepAxis::Scheme, Some(_)) => fixed(base)?,
        };
        Ok(Variant { population, params })
    }

    fn families(&self, value: Option<&AxisValue>) -> Result<Vec<SchemeFamily>> {
        match (self.spec.axis, value) {
            (SweepAxis::Scheme, Some(v)) => Ok(vec![v.family()?]),
            (SweepAxis::Scheme, None) => self.spec.values.iter().map(AxisValue::family).collect(),
            _ => Ok(self.spec.families.clone()),
        }
    }

    fn solve(&self, variant: &Variant, family: SchemeFamily) -> Result<EquilibriumResult> {
        solve_numeric(&variant.population.profiles, &variant.params, family, self.opts)
    }

    fn run_seed(&self, seed: u64) -> Result<Vec<PointResult>> {
        let base = Population::generate(self.cal, seed)?;

        // Baseline revenue per family for this seed.
        let mut baseline: BTreeMap<SchemeFamily, f64> = BTreeMap::new();
        match &self.spec.baseline {
            Baseline::None => {}
            Baseline::OnTheSpot => {
                let v = self.variant(&base, None, seed)?;
                for f in self.families(None)? {
                    baseline.insert(f, self.solve(&v, f)?.revenue());
                }
            }
            Baseline::Value(b) => {
                let v = self.variant(&base, Some(b), seed)?;
                if self.spec.axis == SweepAxis::Scheme {
                    let r = self.solve(&v, b.family()?)?.revenue();
                    for f in self.families(None)? {
                        baseline.insert(f, r);
                    }
                } else {
                    for f in self.families(Some(b))? {
                        baseline.insert(f, self.solve(&v, f)?.revenue());
                    }
                }
            }
        }

        let mut out = Vec::new();
        for value in &self.spec.values {
            let variant = self.variant(&base, Some(value), seed)?;
            for family in self.families(Some(value))? {
                let result = self.solve(&variant, family)?;
                let base_rev = baseline.get(&family).copied();
                let revenue = result.revenue();
                let o = result.outcome.as_ref();
                out.push(PointResult {
                    value: value.label(),
                    family,
                    seed,
                    feasible: result.is_feasible(),
                    saturation: result.saturation,
                    revenue,
                    surplus: o.map_or(0.0, |o| o.surplus),
                    welfare: o.map_or(0.0, |o| o.welfare),
                    subscription_ratio: o.map_or(0.0, |o| o.subscription_ratio),
                    adoption_fraction: o.map_or(0.0, |o| o.adoption_fraction),
                    payment_per_unit_traffic: o.map_or(0.0, |o| o.payment_per_unit_traffic),
                    price: headline_price(&result),
                    kappa_avg: o.map_or(0.0, |o| o.kappa_avg),
                    kappa_peak: o.map_or(0.0, |o| o.kappa_peak),
                    baseline_revenue: base_rev,
                    relative_gain: base_rev.and_then(|b| relative_gain(revenue, b)),
                    variance: o.and_then(|o| cell_load_variance(o).ok()),
                });
            }
        }
        Ok(out)
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    if v.is_empty() {
        0.0
    } else {
        crate::numeric::sum(&v) / v.len() as f64
    }
}

/// Sample standard deviation; zero for fewer than two values.
fn spread(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values.iter().copied());
    (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}

fn summarize(axis: SweepAxis, points: Vec<PointResult>) -> ComparisonReport {
    // Keys in first-appearance order so rows follow the sweep's value order.
    let mut keys: Vec<(String, SchemeFamily)> = Vec::new();
    for p in &points {
        let k = (p.value.clone(), p.family);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    let mut rows = Vec::new();
    let mut variance = Vec::new();
    for (value, family) in keys {
        let group: Vec<&PointResult> = points
            .iter()
            .filter(|p| p.value == value && p.family == family)
            .collect();
        let revenues: Vec<f64> = group.iter().map(|p| p.revenue).collect();
        let revenue = mean(revenues.iter().copied());
        let baselines: Vec<f64> = group.iter().filter_map(|p| p.baseline_revenue).collect();
        let baseline_revenue = (baselines.len() == group.len()).then(|| mean(baselines.iter().copied()));
        let gains: Vec<f64> = group.iter().filter_map(|p| p.relative_gain).collect();
        let m = |f: fn(&PointResult) -> f64| mean(group.iter().map(|p| f(p)));
        rows.push(ComparisonRow {
            value: value.clone(),
            family,
            seeds: group.len(),
            infeasible_seeds: group.iter().filter(|p| !p.feasible).count(),
            saturated_seeds: group
                .iter()
                .filter(|p| p.saturation == Saturation::OptSaturated)
                .count(),
            revenue,
            revenue_sd: spread(&revenues),
            baseline_revenue,
            relative_gain: baseline_revenue.and_then(|b| relative_gain(revenue, b)),
            relative_gain_sd: (gains.len() == group.len()).then(|| spread(&gains)),
            surplus: m(|p| p.surplus),
            welfare: m(|p| p.welfare),
            subscription_ratio: m(|p| p.subscription_ratio),
            adoption_fraction: m(|p| p.adoption_fraction),
            payment_per_unit_traffic: m(|p| p.payment_per_unit_traffic),
            price: m(|p| p.price),
            kappa_avg: m(|p| p.kappa_avg),
            kappa_peak: m(|p| p.kappa_peak),
        });
        let series: Vec<&Vec<f64>> = group.iter().filter_map(|p| p.variance.as_ref()).collect();
        if !series.is_empty() && series.len() == group.len() {
            let slots = series[0].len();
            let per_slot = (0..slots)
                .map(|t| mean(series.iter().map(|s| s[t])))
                .collect();
            variance.push(VarianceSeries {
                value,
                family,
                per_slot,
            });
        }
    }
    ComparisonReport {
        axis,
        rows,
        points,
        variance,
    }
}

/// Runs a sweep: one solve per (value, family, seed), with gains against the
/// baseline of the same seed. Seeds run in parallel and are merged in order.
pub fn run_scenario_sweep(cal: &Calibration, spec: &SweepSpec, opts: &SolverOptions) -> Result<ComparisonReport> {
    spec.validate()?;
    cal.validate()?;
    let sweeper = Sweeper { cal, spec, opts };
    let seeds: Vec<u64> = spec.seeds().collect();
    let per_seed: Vec<Vec<PointResult>> = seeds
        .par_iter()
        .map(|&s| sweeper.run_seed(s))
        .collect::<Result<_>>()?;
    let mut points: Vec<PointResult> = per_seed.into_iter().flatten().collect();
    // Present by value, then family, then seed.
    let order: Vec<String> = spec.values.iter().map(AxisValue::label).collect();
    points.sort_by(|a, b| {
        let ia = order.iter().position(|v| *v == a.value);
        let ib = order.iter().position(|v| *v == b.value);
        ia.cmp(&ib).then(a.family.cmp(&b.family)).then(a.seed.cmp(&b.seed))
    });
    Ok(summarize(spec.axis, points))
}

/// Network upgrade against delayed offloading.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityComparison {
    /// Zero scenario at 3G and 4G capacity; gains against 3G.
    pub upgrade: ComparisonReport,
    /// All scenarios at 3G capacity; gains against the zero scenario.
    pub offloading: ComparisonReport,
}

impl CapacityComparison {
    pub fn upgrade_gain(&self, family: SchemeFamily) -> Option<f64> {
        self.upgrade.rows.iter().rev().find(|r| r.family == family)?.relative_gain
    }

    /// Largest zero-to-delayed gain over the scenarios.
    pub fn offloading_gain(&self, family: SchemeFamily) -> Option<f64> {
        self.offloading
            .rows
            .iter()
            .filter(|r| r.family == family)
            .filter_map(|r| r.relative_gain)
            .reduce(f64::max)
    }
}

pub fn run_capacity_comparison(
    cal: &Calibration,
    families: &[SchemeFamily],
    repetitions: usize,
    opts: &SolverOptions,
) -> Result<CapacityComparison> {
    let c3 = cal.model.capacity_per_cell;
    let c4 = cal.upgraded_capacity();
    let upgrade = SweepSpec {
        axis: SweepAxis::Capacity,
        values: vec![AxisValue::Number(c3), AxisValue::Number(c4)],
        families: families.to_vec(),
        scenario: DelayScenario::Zero,
        baseline: Baseline::Value(AxisValue::Number(c3)),
        repetitions,
        first_seed: cal.model.rng_seed,
    };
    let offloading = SweepSpec::scenarios(families.to_vec(), repetitions).starting_at(cal.model.rng_seed);
    Ok(CapacityComparison {
        upgrade: run_scenario_sweep(cal, &upgrade, opts)?,
        offloading: run_scenario_sweep(cal, &offloading, opts)?,
    })
}

/// Flat fee, subscription ratio and volume payment per unit traffic for each
/// scenario.
pub fn run_price_dynamics(cal: &Calibration, repetitions: usize, opts: &SolverOptions) -> Result<ComparisonReport> {
    let spec = SweepSpec::scenarios(vec![SchemeFamily::Flat, SchemeFamily::Volume], repetitions)
        .starting_at(cal.model.rng_seed);
    run_scenario_sweep(cal, &spec, opts)
}

/// All four tariffs on the zero and long scenarios, with cell-load variance.
pub fn run_granularity_comparison(
    cal: &Calibration,
    repetitions: usize,
    opts: &SolverOptions,
) -> Result<ComparisonReport> {
    let mut spec = SweepSpec::scenarios(SchemeFamily::ALL.to_vec(), repetitions).starting_at(cal.model.rng_seed);
    spec.values = [DelayScenario::Zero, DelayScenario::Long]
        .iter()
        .map(|s| AxisValue::Name(s.name().into()))
        .collect();
    run_scenario_sweep(cal, &spec, opts)
}

/// Volume revenue gain over on-the-spot offloading and adoption of delayed
/// offloading for each disutility factor.
pub fn run_disutility_sweep(
    cal: &Calibration,
    scenario: DelayScenario,
    factors: &[f64],
    repetitions: usize,
    opts: &SolverOptions,
) -> Result<ComparisonReport> {
    let spec = SweepSpec {
        axis: SweepAxis::Disutility,
        values: factors.iter().map(|&f| AxisValue::Number(f)).collect(),
        families: vec![SchemeFamily::Volume],
        scenario,
        baseline: Baseline::OnTheSpot,
        repetitions,
        first_seed: cal.model.rng_seed,
    };
    run_scenario_sweep(cal, &spec, opts)
}

/// Mixed populations: each mix gives the share of users on each scenario.
pub fn run_mix_sweep(
    cal: &Calibration,
    mixes: &[BTreeMap<DelayScenario, f64>],
    families: &[SchemeFamily],
    repetitions: usize,
    opts: &SolverOptions,
) -> Result<ComparisonReport> {
    let zero: BTreeMap<DelayScenario, f64> = [(DelayScenario::Zero, 1.0)].into_iter().collect();
    let spec = SweepSpec {
        axis: SweepAxis::Mix,
        values: mixes.iter().cloned().map(AxisValue::Mix).collect(),
        families: families.to_vec(),
        scenario: DelayScenario::Zero,
        baseline: Baseline::Value(AxisValue::Mix(zero)),
        repetitions,
        first_seed: cal.model.rng_seed,
    };
    run_scenario_sweep(cal, &spec, opts)
}

/// Mixes ordered so that each one shifts users toward longer deadlines
/// (first-order dominance over the previous mix).
pub fn default_mixes() -> Vec<BTreeMap<DelayScenario, f64>> {
    let shares: [[f64; 4]; 5] = [
        [1.0, 0.0, 0.0, 0.0],
        [0.4, 0.2, 0.2, 0.2],
        [0.25, 0.25, 0.25, 0.25],
        [0.1, 0.2, 0.3, 0.4],
        [0.0, 0.0, 0.0, 1.0],
    ];
    shares
        .iter()
        .map(|row| {
            DelayScenario::ALL
                .iter()
                .zip(row)
                .filter(|(_, w)| **w > 0.0)
                .map(|(s, w)| (*s, *w))
                .collect()
        })
        .collect()
}
