//! Model parameters, demand and delay-tolerance distributions, and the
//! per-user profile that the response and market layers consume.

use std::collections::BTreeMap;
use std::fmt;

use rand::distr::{Distribution, OpenClosed01};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::mobility::ContactMatrix;

/// Days used when converting monthly volumes to daily volumes.
pub const DAYS_PER_MONTH: f64 = 30.0;

/// Deadlines (in minutes) on which WiFi contact probabilities are tabulated.
pub const DEADLINE_GRID_MINUTES: [u32; 6] = [0, 10, 30, 60, 120, 360];

/// Tolerance used for the sum-to-one checks on weights and shares.
pub const SHARE_TOLERANCE: f64 = 1e-9;

/// Global market parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub num_cells: usize,
    pub users_per_cell: usize,
    /// Slots per day (T).
    pub num_slots: usize,
    /// Length of one slot in hours.
    pub slot_hours: f64,
    /// Expected 3G volume one cell can carry per slot. May be infinite.
    pub capacity_per_cell: f64,
    pub theta: f64,
    /// Network cost per unit of 3G traffic.
    pub eta: f64,
    /// Longest deadline a delay profile may carry, in slots.
    pub max_deadline: usize,
    /// First seed of the built-in experiments.
    pub rng_seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            num_cells: 31,
            users_per_cell: 1000,
            num_slots: 24,
            slot_hours: 1.0,
            capacity_per_cell: 3600.0,
            theta: 0.5,
            eta: 0.1,
            max_deadline: 6,
            rng_seed: 1,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::Domain {
                what: "theta",
                value: self.theta,
                domain: "(0, 1)",
            });
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::Domain {
                what: "eta",
                value: self.eta,
                domain: "[0, inf)",
            });
        }
        if !(self.capacity_per_cell > 0.0) {
            return Err(Error::Domain {
                what: "capacity_per_cell",
                value: self.capacity_per_cell,
                domain: "(0, inf]",
            });
        }
        if !(self.slot_hours > 0.0 && self.slot_hours.is_finite()) {
            return Err(Error::Domain {
                what: "slot_hours",
                value: self.slot_hours,
                domain: "(0, inf)",
            });
        }
        if self.num_slots == 0 {
            return Err(config("num_slots must be at least 1"));
        }
        if self.max_deadline >= self.num_slots {
            return Err(config(format!(
                "max_deadline ({}) must be smaller than num_slots ({})",
                self.max_deadline, self.num_slots
            )));
        }
        if self.num_cells == 0 || self.users_per_cell == 0 {
            return Err(config("num_cells and users_per_cell must be positive"));
        }
        Ok(())
    }

    pub fn num_users(&self) -> usize {
        self.num_cells * self.users_per_cell
    }

    pub fn slot_minutes(&self) -> f64 {
        self.slot_hours * 60.0
    }
}

/// A traffic deadline, stored in minutes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Deadline(pub u32);

impl Deadline {
    pub const ZERO: Deadline = Deadline(0);

    pub fn minutes(m: u32) -> Self {
        Deadline(m)
    }

    pub fn hours(h: u32) -> Self {
        Deadline(h * 60)
    }

    /// Number of whole slots the transmission may be pushed back.
    pub fn slot_shift(self, slot_minutes: f64) -> usize {
        (f64::from(self.0) / slot_minutes + 1e-9).floor() as usize
    }

    /// Default contact-lookup grid.
    pub fn grid() -> Vec<Deadline> {
        DEADLINE_GRID_MINUTES.iter().map(|&m| Deadline(m)).collect()
    }
}

impl fmt::Display for Deadline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 == 0 {
            write!(f, "0")
        } else if self.0 % 60 == 0 {
            write!(f, "{}h", self.0 / 60)
        } else {
            write!(f, "{}m", self.0)
        }
    }
}

/// Share of a user's traffic that tolerates each deadline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayProfile {
    shares: BTreeMap<Deadline, f64>,
}

impl DelayProfile {
    pub fn new(shares: BTreeMap<Deadline, f64>) -> Result<Self> {
        let mut total = 0.0;
        for (&d, &a) in &shares {
            if !(-SHARE_TOLERANCE..=1.0 + SHARE_TOLERANCE).contains(&a) {
                return Err(config(format!("delay share for deadline {d} is {a}")));
            }
            total += a;
        }
        if (total - 1.0).abs() > SHARE_TOLERANCE {
            return Err(config(format!("delay shares sum to {total}, expected 1")));
        }
        // Summed class shares can overshoot [0, 1] by rounding.
        let shares = shares
            .into_iter()
            .map(|(d, a)| (d, a.clamp(0.0, 1.0)))
            .filter(|&(_, a)| a > 0.0)
            .collect();
        Ok(Self { shares })
    }

    /// Everything must be sent immediately.
    pub fn on_the_spot() -> Self {
        Self {
            shares: BTreeMap::from([(Deadline::ZERO, 1.0)]),
        }
    }

    pub fn single(deadline: Deadline) -> Self {
        Self {
            shares: BTreeMap::from([(deadline, 1.0)]),
        }
    }

    pub fn shares(&self) -> &BTreeMap<Deadline, f64> {
        &self.shares
    }

    pub fn share(&self, d: Deadline) -> f64 {
        self.shares.get(&d).copied().unwrap_or(0.0)
    }

    pub fn max_deadline(&self) -> Deadline {
        self.shares.keys().next_back().copied().unwrap_or(Deadline::ZERO)
    }

    pub fn is_on_the_spot(&self) -> bool {
        self.shares.keys().all(|&d| d == Deadline::ZERO)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrafficClass {
    Video,
    Data,
    P2p,
    Audio,
}

impl TrafficClass {
    pub const ALL: [TrafficClass; 4] = [
        TrafficClass::Video,
        TrafficClass::Data,
        TrafficClass::P2p,
        TrafficClass::Audio,
    ];
}

/// Named deadline assignments per traffic class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DelayScenario {
    Zero,
    Short,
    Medium,
    Long,
}

impl DelayScenario {
    pub const ALL: [DelayScenario; 4] = [
        DelayScenario::Zero,
        DelayScenario::Short,
        DelayScenario::Medium,
        DelayScenario::Long,
    ];

    pub fn deadline(self, class: TrafficClass) -> Deadline {
        use DelayScenario::*;
        use TrafficClass::*;
        match (self, class) {
            (Zero, _) | (_, Audio) => Deadline::ZERO,
            (Short, Video) | (Short, P2p) => Deadline::minutes(10),
            (Short, Data) => Deadline::minutes(30),
            (Medium, Video) | (Medium, P2p) => Deadline::minutes(30),
            (Medium, Data) => Deadline::hours(1),
            (Long, Video) | (Long, P2p) => Deadline::hours(2),
            (Long, Data) => Deadline::hours(6),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DelayScenario::Zero => "zero",
            DelayScenario::Short => "short",
            DelayScenario::Medium => "medium",
            DelayScenario::Long => "long",
        }
    }
}

impl fmt::Display for DelayScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for DelayScenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zero" => Ok(DelayScenario::Zero),
            "short" => Ok(DelayScenario::Short),
            "medium" => Ok(DelayScenario::Medium),
            "long" => Ok(DelayScenario::Long),
            other => Err(config(format!("unknown delay scenario '{other}'"))),
        }
    }
}

/// Traffic volume shares of the four classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassMix {
    pub video: f64,
    pub data: f64,
    pub p2p: f64,
    pub audio: f64,
}

impl Default for ClassMix {
    fn default() -> Self {
        Self {
            video: 0.664,
            data: 0.209,
            p2p: 0.061,
            audio: 0.066,
        }
    }
}

impl ClassMix {
    pub fn share(&self, class: TrafficClass) -> f64 {
        match class {
            TrafficClass::Video => self.video,
            TrafficClass::Data => self.data,
            TrafficClass::P2p => self.p2p,
            TrafficClass::Audio => self.audio,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let shares = TrafficClass::ALL.map(|c| self.share(c));
        if shares.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return Err(config("class shares must lie in [0, 1]"));
        }
        let total: f64 = shares.iter().sum();
        if (total - 1.0).abs() > SHARE_TOLERANCE {
            return Err(config(format!("class shares sum to {total}, expected 1")));
        }
        Ok(())
    }
}

/// Collapses a class mix onto the deadlines of a named scenario.
pub fn build_delay_profile(scenario: DelayScenario, mix: &ClassMix) -> Result<DelayProfile> {
    mix.validate()?;
    let mut shares = BTreeMap::new();
    for class in TrafficClass::ALL {
        *shares.entry(scenario.deadline(class)).or_insert(0.0) += mix.share(class);
    }
    DelayProfile::new(shares)
}

/// Same as [`build_delay_profile`] but takes the scenario by name.
pub fn build_delay_profile_named(name: &str, mix: &ClassMix) -> Result<DelayProfile> {
    build_delay_profile(name.parse()?, mix)
}

/// Upper-truncated power law on `(0, phi_max]` with density `x^-sigma / Z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandDistribution {
    pub sigma: f64,
    pub phi_max: f64,
}

impl DemandDistribution {
    pub fn new(sigma: f64, phi_max: f64) -> Result<Self> {
        let d = Self { sigma, phi_max };
        d.validate()?;
        Ok(d)
    }

    /// Chooses `phi_max` so that the distribution has the requested mean.
    pub fn with_mean(sigma: f64, mean: f64) -> Result<Self> {
        Self::new(sigma, mean * (2.0 - sigma) / (1.0 - sigma))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return Err(Error::Domain {
                what: "sigma",
                value: self.sigma,
                domain: "(0, 1)",
            });
        }
        if !(self.phi_max > 0.0 && self.phi_max.is_finite()) {
            return Err(Error::Domain {
                what: "phi_max",
                value: self.phi_max,
                domain: "(0, inf)",
            });
        }
        let z = self.normalizer();
        if !(z > 0.0 && z.is_finite()) {
            return Err(config(format!("demand normalizer is {z}")));
        }
        Ok(())
    }

    pub fn normalizer(&self) -> f64 {
        self.phi_max.powf(1.0 - self.sigma) / (1.0 - self.sigma)
    }

    pub fn mean(&self) -> f64 {
        (1.0 - self.sigma) / (2.0 - self.sigma) * self.phi_max
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x <= 0.0 || x > self.phi_max {
            0.0
        } else {
            x.powf(-self.sigma) / self.normalizer()
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x >= self.phi_max {
            1.0
        } else {
            (x / self.phi_max).powf(1.0 - self.sigma)
        }
    }

    /// Inverse CDF; `u` is clamped to `[0, 1]`.
    pub fn quantile(&self, u: f64) -> f64 {
        self.phi_max * u.clamp(0.0, 1.0).powf(1.0 / (1.0 - self.sigma))
    }

    /// Same distribution rescaled to a new mean.
    pub fn scaled_to_mean(&self, mean: f64) -> Result<Self> {
        Self::with_mean(self.sigma, mean)
    }
}

impl Distribution<f64> for DemandDistribution {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = OpenClosed01.sample(rng);
        self.quantile(u)
    }
}

/// Draws `n` daily demands by inverse-CDF sampling.
pub fn sample_demands<R: Rng + ?Sized>(
    dist: &DemandDistribution,
    n: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    dist.validate()?;
    if n == 0 {
        return Err(config("sample size must be at least 1"));
    }
    Ok((0..n).map(|_| dist.sample(rng)).collect())
}

/// Draws one demand from each of `n` equal-probability strata, in stratum order.
pub fn sample_demands_stratified<R: Rng + ?Sized>(
    dist: &DemandDistribution,
    n: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    dist.validate()?;
    if n == 0 {
        return Err(config("sample size must be at least 1"));
    }
    Ok((0..n)
        .map(|i| {
            let v: f64 = OpenClosed01.sample(rng);
            dist.quantile((i as f64 + v) / n as f64)
        })
        .collect())
}

/// Normalizes a nonnegative usage pattern into temporal weights.
pub fn build_temporal_weights(pattern: &[f64]) -> Result<Vec<f64>> {
    if pattern.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(config("usage pattern entries must be finite and nonnegative"));
    }
    let total = crate::numeric::sum(pattern);
    if total <= 0.0 {
        return Err(config("usage pattern has no positive entry"));
    }
    Ok(pattern.iter().map(|v| v / total).collect())
}

/// `gamma(t) = nu * w(t)^(1 - theta)` for a given scale `nu`.
pub fn scaled_willingness(weights: &[f64], theta: f64, nu: f64) -> Vec<f64> {
    weights.iter().map(|w| nu * w.powf(1.0 - theta)).collect()
}

/// Draws the scale uniformly on (0, 1) and returns `(nu, gamma)`.
pub fn build_willingness<R: Rng + ?Sized>(
    weights: &[f64],
    theta: f64,
    rng: &mut R,
) -> (f64, Vec<f64>) {
    let nu = loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            break u;
        }
    };
    (nu, scaled_willingness(weights, theta, nu))
}

/// A raised-cosine daily profile peaking at `peak_hour`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RaisedCosine {
    pub peak_hour: f64,
    /// Ratio of the peak value to the trough value (at least 1).
    pub peak_to_trough: f64,
}

impl RaisedCosine {
    pub fn at_hour(&self, hour: f64) -> f64 {
        let r = self.peak_to_trough.max(1.0);
        let phase = 2.0 * std::f64::consts::PI * (hour - self.peak_hour) / 24.0;
        1.0 + (r - 1.0) * 0.5 * (1.0 + phase.cos())
    }

    /// Profile sampled at slot midpoints.
    pub fn sampled(&self, num_slots: usize, slot_hours: f64) -> Vec<f64> {
        (0..num_slots)
            .map(|t| self.at_hour((t as f64 + 0.5) * slot_hours))
            .collect()
    }
}

/// Diurnal shapes for the two kinds of cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiurnalShapes {
    pub office: RaisedCosine,
    pub residential: RaisedCosine,
}

impl Default for DiurnalShapes {
    fn default() -> Self {
        Self {
            office: RaisedCosine {
                peak_hour: 14.0,
                peak_to_trough: 12.0,
            },
            residential: RaisedCosine {
                peak_hour: 21.0,
                peak_to_trough: 6.0,
            },
        }
    }
}

/// Per-deadline-shift deferral term: `rate[t] = sum_d alpha^d (1 - e^d(t))`
/// over the deadlines that map to `shift` slots.
#[derive(Debug, Clone, PartialEq)]
pub struct DeferralTerm {
    pub shift: usize,
    pub rate: Vec<f64>,
}

/// Raw parts of a user profile.
#[derive(Debug, Clone)]
pub struct UserParts {
    pub daily_demand: f64,
    pub temporal_weight: Vec<f64>,
    pub willingness: Vec<f64>,
    pub delay_profile: DelayProfile,
    pub wifi_contact: ContactMatrix,
    pub cell_path: Vec<usize>,
    pub disutility_factor: f64,
}

/// One user's demand, preferences, delay tolerance and mobility.
#[derive(Debug, Clone, PartialEq)]
pub struct UserProfile {
    daily_demand: f64,
    temporal_weight: Vec<f64>,
    willingness: Vec<f64>,
    delay_profile: DelayProfile,
    wifi_contact: ContactMatrix,
    cell_path: Vec<usize>,
    disutility_factor: f64,
    slot_minutes: f64,
    deferral: Vec<DeferralTerm>,
    kappa: Vec<f64>,
}

impl UserProfile {
    /// Builds and validates a profile. `slot_minutes` maps deadlines to slot shifts.
    pub fn new(parts: UserParts, slot_minutes: f64) -> Result<Self> {
        let mut p = Self {
            daily_demand: parts.daily_demand,
            temporal_weight: parts.temporal_weight,
            willingness: parts.willingness,
            delay_profile: parts.delay_profile,
            wifi_contact: parts.wifi_contact,
            cell_path: parts.cell_path,
            disutility_factor: parts.disutility_factor,
            slot_minutes,
            deferral: Vec::new(),
            kappa: Vec::new(),
        };
        p.validate()?;
        p.rebuild_cache()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        let t = self.temporal_weight.len();
        if t == 0 {
            return Err(config("profile has no slots"));
        }
        if !(self.daily_demand >= 0.0 && self.daily_demand.is_finite()) {
            return Err(config(format!("daily demand {} is invalid", self.daily_demand)));
        }
        if self.temporal_weight.iter().any(|w| !(*w >= 0.0)) {
            return Err(config("temporal weights must be nonnegative"));
        }
        let total = crate::numeric::sum(&self.temporal_weight);
        if (total - 1.0).abs() > SHARE_TOLERANCE {
            return Err(config(format!("temporal weights sum to {total}")));
        }
        if self.willingness.len() != t || self.willingness.iter().any(|g| !(*g >= 0.0)) {
            return Err(config("willingness must be nonnegative with one entry per slot"));
        }
        if self.cell_path.len() != t {
            return Err(config("cell path must have one entry per slot"));
        }
        if self.wifi_contact.num_slots() != t {
            return Err(config("contact matrix slot count does not match"));
        }
        if !(0.0..=1.0).contains(&self.disutility_factor) {
            return Err(Error::Domain {
                what: "disutility_factor",
                value: self.disutility_factor,
                domain: "[0, 1]",
            });
        }
        if !(self.slot_minutes > 0.0) {
            return Err(config("slot length must be positive"));
        }
        for &d in self.delay_profile.shares().keys() {
            if self.wifi_contact.deadline_index(d).is_none() {
                return Err(config(format!("no contact data for deadline {d}")));
            }
            if d.slot_shift(self.slot_minutes) >= t {
                return Err(config(format!("deadline {d} spans a whole day")));
            }
        }
        Ok(())
    }

    fn rebuild_cache(&mut self) -> Result<()> {
        let t_len = self.num_slots();
        let mut by_shift: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for (&d, &alpha) in self.delay_profile.shares() {
            let row = self
                .wifi_contact
                .row(d)
                .ok_or_else(|| config(format!("no contact data for deadline {d}")))?;
            let rate = by_shift
                .entry(d.slot_shift(self.slot_minutes))
                .or_insert_with(|| vec![0.0; t_len]);
            for (r, e) in rate.iter_mut().zip(row) {
                *r += alpha * (1.0 - e);
            }
        }
        self.deferral = by_shift
            .into_iter()
            .map(|(shift, rate)| DeferralTerm { shift, rate })
            .collect();
        let mut kappa = vec![0.0; t_len];
        for term in &self.deferral {
            for (k, r) in kappa.iter_mut().zip(&term.rate) {
                *k += r;
            }
        }
        for k in &mut kappa {
            *k = k.clamp(0.0, 1.0);
        }
        self.kappa = kappa;
        Ok(())
    }

    /// Same user with a different delay profile.
    pub fn with_delay_profile(&self, profile: DelayProfile) -> Result<Self> {
        let mut p = self.clone();
        p.delay_profile = profile;
        p.validate()?;
        p.rebuild_cache()?;
        Ok(p)
    }

    pub fn with_disutility_factor(&self, factor: f64) -> Result<Self> {
        let mut p = self.clone();
        p.disutility_factor = factor;
        p.validate()?;
        Ok(p)
    }

    pub fn num_slots(&self) -> usize {
        self.temporal_weight.len()
    }

    pub fn daily_demand(&self) -> f64 {
        self.daily_demand
    }

    pub fn temporal_weight(&self) -> &[f64] {
        &self.temporal_weight
    }

    pub fn willingness(&self) -> &[f64] {
        &self.willingness
    }

    pub fn delay_profile(&self) -> &DelayProfile {
        &self.delay_profile
    }

    pub fn wifi_contact(&self) -> &ContactMatrix {
        &self.wifi_contact
    }

    pub fn cell_path(&self) -> &[usize] {
        &self.cell_path
    }

    pub fn disutility_factor(&self) -> f64 {
        self.disutility_factor
    }

    pub fn slot_minutes(&self) -> f64 {
        self.slot_minutes
    }

    /// Demand at slot `t`: `w(t) * Phi`.
    pub fn slot_demand(&self, t: usize) -> f64 {
        self.temporal_weight[t] * self.daily_demand
    }

    pub fn slot_demands(&self) -> Vec<f64> {
        self.temporal_weight
            .iter()
            .map(|w| w * self.daily_demand)
            .collect()
    }

    /// Expected 3G fraction of traffic generated at each slot.
    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    pub fn deferral_terms(&self) -> &[DeferralTerm] {
        &self.deferral
    }

    /// `sum_t gamma(t) x(t)^theta`.
    pub fn gross_utility(&self, x: &[f64], theta: f64) -> f64 {
        self.willingness
            .iter()
            .zip(x)
            .map(|(g, x)| if *x > 0.0 { g * crate::numeric::pow(*x, theta) } else { 0.0 })
            .collect::<crate::numeric::CompensatedSum>()
            .value()
    }

    /// Gross utility of consuming the full demand.
    pub fn full_utility(&self, theta: f64) -> f64 {
        self.gross_utility(&self.slot_demands(), theta)
    }
}
