//! Cell association paths and WiFi contact probabilities.

use std::collections::BTreeMap;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Beta;
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::scenario::{Deadline, DiurnalShapes, SHARE_TOLERANCE};

/// Contact probabilities `e^d(t)` for one user: one row per deadline.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactMatrix {
    deadlines: Vec<Deadline>,
    values: Vec<Vec<f64>>,
}

impl ContactMatrix {
    /// Rows must be ordered by strictly increasing deadline, values in
    /// `[0, 1]` and non-decreasing down each column.
    pub fn new(deadlines: Vec<Deadline>, values: Vec<Vec<f64>>) -> Result<Self> {
        if deadlines.is_empty() || deadlines.len() != values.len() {
            return Err(config("contact matrix needs one row per deadline"));
        }
        if deadlines.windows(2).any(|w| w[0] >= w[1]) {
            return Err(config("contact deadlines must be strictly increasing"));
        }
        let t = values[0].len();
        if t == 0 || values.iter().any(|r| r.len() != t) {
            return Err(config("contact rows must share a positive slot count"));
        }
        for row in &values {
            if row.iter().any(|e| !(0.0..=1.0).contains(e)) {
                return Err(config("contact probabilities must lie in [0, 1]"));
            }
        }
        for pair in values.windows(2) {
            if pair[0].iter().zip(&pair[1]).any(|(a, b)| b < a) {
                return Err(config("contact probability decreases with the deadline"));
            }
        }
        Ok(Self { deadlines, values })
    }

    /// Same probability for every deadline and slot.
    pub fn constant(deadlines: Vec<Deadline>, num_slots: usize, e: f64) -> Result<Self> {
        let rows = vec![vec![e; num_slots]; deadlines.len()];
        Self::new(deadlines, rows)
    }

    /// Per-deadline probabilities that do not vary over the day.
    pub fn time_invariant(deadlines: Vec<Deadline>, num_slots: usize, means: &[f64]) -> Result<Self> {
        let rows = means.iter().map(|&e| vec![e; num_slots]).collect();
        Self::new(deadlines, rows)
    }

    pub fn deadlines(&self) -> &[Deadline] {
        &self.deadlines
    }

    pub fn num_slots(&self) -> usize {
        self.values[0].len()
    }

    pub fn deadline_index(&self, d: Deadline) -> Option<usize> {
        self.deadlines.binary_search(&d).ok()
    }

    pub fn row(&self, d: Deadline) -> Option<&[f64]> {
        self.deadline_index(d).map(|k| self.values[k].as_slice())
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn get(&self, d: Deadline, t: usize) -> Option<f64> {
        self.row(d).map(|r| r[t])
    }
}

/// Home-window boundaries, in hours, for the two user types.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomeWindows {
    pub residential: (f64, f64),
    pub office: (f64, f64),
}

impl Default for HomeWindows {
    fn default() -> Self {
        Self {
            residential: (0.0, 8.0),
            office: (9.0, 17.0),
        }
    }
}

/// Generator for heterogeneous WiFi contact probabilities.
///
/// Each user draws a mobility quality `q ~ Beta(a, b)`. The miss probability
/// `1 - e^d(t)` is the population mean miss rate scaled by
/// `1 + h (q / E[q] * D(t) - 1)`, where `D(t)` lowers misses by `home_boost`
/// inside the user's home window and raises them elsewhere so that its daily
/// mean is one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContactModel {
    pub deadline_grid: Vec<Deadline>,
    pub mean_contact: Vec<f64>,
    /// 0 gives every user the mean contact probabilities; 1 applies the
    /// full quality and diurnal spread.
    pub heterogeneity: f64,
    pub quality_shape: (f64, f64),
    pub home_boost: f64,
    /// Probability that a user is of the residential type.
    pub residential_share: f64,
    pub home_windows: HomeWindows,
}

impl Default for ContactModel {
    fn default() -> Self {
        Self {
            deadline_grid: Deadline::grid(),
            mean_contact: vec![0.56, 0.70, 0.78, 0.82, 0.845, 0.88],
            heterogeneity: 1.0,
            quality_shape: (2.0, 2.15),
            home_boost: 1.2,
            residential_share: 0.5,
            home_windows: HomeWindows::default(),
        }
    }
}

/// Counters collected while generating contacts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ContactDiagnostics {
    pub clamped: usize,
}

impl ContactModel {
    pub fn validate(&self) -> Result<()> {
        if self.deadline_grid.len() != self.mean_contact.len() || self.deadline_grid.is_empty() {
            return Err(config("mean_contact needs one entry per grid deadline"));
        }
        if self.deadline_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(config("deadline grid must be strictly increasing"));
        }
        if self.mean_contact.iter().any(|e| !(0.0..=1.0).contains(e)) {
            return Err(config("mean contact probabilities must lie in [0, 1]"));
        }
        if self.mean_contact.windows(2).any(|w| w[1] < w[0]) {
            return Err(config("mean contact probability decreases with the deadline"));
        }
        if !(0.0..=1.0).contains(&self.heterogeneity) {
            return Err(config("heterogeneity must lie in [0, 1]"));
        }
        let (a, b) = self.quality_shape;
        if !(a > 0.0 && b > 0.0) {
            return Err(config("quality shape parameters must be positive"));
        }
        if !(self.home_boost >= 1.0) {
            return Err(config("home_boost must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.residential_share) {
            return Err(config("residential_share must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Contact probabilities with no spread across users or slots.
    pub fn homogeneous_matrix(&self, num_slots: usize) -> Result<ContactMatrix> {
        ContactMatrix::time_invariant(self.deadline_grid.clone(), num_slots, &self.mean_contact)
    }

    /// Miss-rate multiplier over the day for one user type; averages to one.
    fn diurnal_factor(&self, window: (f64, f64), num_slots: usize, slot_hours: f64) -> Vec<f64> {
        let in_window: Vec<bool> = (0..num_slots)
            .map(|t| {
                let h = (t as f64 + 0.5) * slot_hours;
                h >= window.0 && h < window.1
            })
            .collect();
        let k = in_window.iter().filter(|&&b| b).count() as f64;
        let n = num_slots as f64;
        if k == 0.0 || k == n {
            return vec![1.0; num_slots];
        }
        let home = 1.0 / self.home_boost;
        let away = (n - k * home) / (n - k);
        in_window
            .into_iter()
            .map(|b| if b { home } else { away })
            .collect()
    }
}

/// Draws one contact matrix per user.
pub fn generate_contacts<R: Rng + ?Sized>(
    model: &ContactModel,
    n: usize,
    num_slots: usize,
    slot_hours: f64,
    rng: &mut R,
) -> Result<(Vec<ContactMatrix>, ContactDiagnostics)> {
    model.validate()?;
    let mut diag = ContactDiagnostics::default();
    if model.heterogeneity == 0.0 {
        let m = model.homogeneous_matrix(num_slots)?;
        return Ok((vec![m; n], diag));
    }
    let (a, b) = model.quality_shape;
    let beta = Beta::new(a, b).map_err(|e| config(format!("quality distribution: {e}")))?;
    let quality_mean = a / (a + b);
    let residential = model.diurnal_factor(model.home_windows.residential, num_slots, slot_hours);
    let office = model.diurnal_factor(model.home_windows.office, num_slots, slot_hours);
    let h = model.heterogeneity;

    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let q: f64 = beta.sample(rng);
        let is_residential = rng.random::<f64>() < model.residential_share;
        let diurnal = if is_residential { &residential } else { &office };
        let scale = q / quality_mean;
        let rows = model
            .mean_contact
            .iter()
            .map(|&mean| {
                diurnal
                    .iter()
                    .map(|&dt| {
                        let miss = (1.0 - mean) * (1.0 + h * (scale * dt - 1.0));
                        if !(0.0..=1.0).contains(&miss) {
                            diag.clamped += 1;
                        }
                        1.0 - miss.clamp(0.0, 1.0)
                    })
                    .collect()
            })
            .collect();
        out.push(ContactMatrix::new(model.deadline_grid.clone(), rows)?);
    }
    Ok((out, diag))
}

/// Inputs to the cell-path generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MobilityConfig {
    pub num_cells: usize,
    pub office_cells: usize,
    pub residential_cells: usize,
    /// Distribution of the number of distinct cells visited in a day.
    pub visited_bs_distribution: BTreeMap<usize, f64>,
    /// `cell_attraction[t][s]`: relative pull of cell `s` during slot `t`.
    pub cell_attraction: Vec<Vec<f64>>,
    /// Move users between handovers so each slot's occupancy follows that
    /// slot's attraction. Without it, occupancy only drifts through
    /// scheduled handovers.
    #[serde(default = "default_true")]
    pub rebalance: bool,
}

fn default_true() -> bool {
    true
}

/// Truncated geometric distribution over `1..=max` with ratio `q`.
pub fn truncated_geometric(q: f64, max: usize) -> BTreeMap<usize, f64> {
    let raw: Vec<f64> = (0..max).map(|k| q.powi(k as i32)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter()
        .enumerate()
        .map(|(k, v)| (k + 1, v / total))
        .collect()
}

/// Default distinct-cell count distribution: geometric over 1..6, mean about 2.4.
pub fn default_visited_distribution() -> BTreeMap<usize, f64> {
    truncated_geometric(0.66, 6)
}

impl MobilityConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_cells == 0 {
            return Err(config("num_cells must be positive"));
        }
        if self.office_cells + self.residential_cells != self.num_cells {
            return Err(config("office_cells + residential_cells must equal num_cells"));
        }
        let total: f64 = self.visited_bs_distribution.values().sum();
        if (total - 1.0).abs() > SHARE_TOLERANCE
            || self
                .visited_bs_distribution
                .iter()
                .any(|(&k, &p)| k == 0 || !(0.0..=1.0).contains(&p))
        {
            return Err(config(
                "visited_bs_distribution must be a probability distribution over counts >= 1",
            ));
        }
        if self.cell_attraction.is_empty() {
            return Err(config("cell_attraction needs at least one slot"));
        }
        for (t, row) in self.cell_attraction.iter().enumerate() {
            if row.len() != self.num_cells {
                return Err(config(format!("attraction row {t} has the wrong length")));
            }
            if row.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                return Err(config(format!("attraction row {t} has a negative entry")));
            }
            if !row.iter().any(|v| *v > 0.0) {
                return Err(config(format!("attraction row {t} has no positive entry")));
            }
        }
        Ok(())
    }

    pub fn num_slots(&self) -> usize {
        self.cell_attraction.len()
    }

    /// Attraction row normalized to a probability vector.
    pub fn occupancy(&self, t: usize) -> Vec<f64> {
        let row = &self.cell_attraction[t];
        let total: f64 = row.iter().sum();
        row.iter().map(|v| v / total).collect()
    }

    /// Total attraction per slot; used as the diurnal usage pattern.
    pub fn usage_pattern(&self) -> Vec<f64> {
        self.cell_attraction.iter().map(|r| r.iter().sum()).collect()
    }

    /// Uniform attraction over all cells at every slot.
    pub fn uniform(num_cells: usize, num_slots: usize) -> Self {
        Self {
            num_cells,
            office_cells: 0,
            residential_cells: num_cells,
            visited_bs_distribution: default_visited_distribution(),
            cell_attraction: vec![vec![1.0; num_cells]; num_slots],
            rebalance: true,
        }
    }
}

/// Parameters of the synthetic city used in place of a measured cell trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticCity {
    pub num_cells: usize,
    pub office_fraction: f64,
    pub shapes: DiurnalShapes,
    /// Ratio between the largest and smallest cell of each kind.
    pub size_spread: f64,
    pub visited_bs_distribution: BTreeMap<usize, f64>,
}

impl SyntheticCity {
    pub fn new(num_cells: usize) -> Self {
        Self {
            num_cells,
            office_fraction: 0.5,
            shapes: DiurnalShapes::default(),
            size_spread: 30.0,
            visited_bs_distribution: default_visited_distribution(),
        }
    }

    /// Attraction of cell `s` at slot `t` is its size times the diurnal
    /// shape of its kind. Sizes are spread geometrically within each kind.
    pub fn build(&self, num_slots: usize, slot_hours: f64) -> Result<MobilityConfig> {
        if self.num_cells == 0 {
            return Err(config("synthetic city needs at least one cell"));
        }
        if !(0.0..=1.0).contains(&self.office_fraction) || !(self.size_spread >= 1.0) {
            return Err(config("invalid synthetic city parameters"));
        }
        let office_cells = (self.office_fraction * self.num_cells as f64).round() as usize;
        let office_cells = office_cells.min(self.num_cells);
        let residential_cells = self.num_cells - office_cells;
        let office_shape = self.shapes.office.sampled(num_slots, slot_hours);
        let home_shape = self.shapes.residential.sampled(num_slots, slot_hours);
        let sizes = |n: usize| -> Vec<f64> {
            (0..n)
                .map(|k| {
                    if n <= 1 {
                        1.0
                    } else {
                        self.size_spread.powf(k as f64 / (n - 1) as f64)
                    }
                })
                .collect()
        };
        let office_sizes = sizes(office_cells);
        let home_sizes = sizes(residential_cells);
        let attraction = (0..num_slots)
            .map(|t| {
                office_sizes
                    .iter()
                    .map(|s| s * office_shape[t])
                    .chain(home_sizes.iter().map(|s| s * home_shape[t]))
                    .collect()
            })
            .collect();
        let cfg = MobilityConfig {
            num_cells: self.num_cells,
            office_cells,
            residential_cells,
            visited_bs_distribution: self.visited_bs_distribution.clone(),
            cell_attraction: attraction,
            rebalance: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Draws one cell path per user.
///
/// Slot-0 cells follow the slot-0 attraction. Each user draws a distinct-cell
/// count `k` and hands over at `k - 1` slots chosen uniformly; at a handover
/// the destination follows that slot's attraction. With `rebalance`, the
/// remaining users leave over-full cells for under-full ones with the minimal
/// probabilities that make every slot's occupancy follow its attraction.
pub fn generate_cell_paths<R: Rng + ?Sized>(
    cfg: &MobilityConfig,
    n: usize,
    rng: &mut R,
) -> Result<Vec<Vec<usize>>> {
    cfg.validate()?;
    let t_len = cfg.num_slots();
    let occupancy: Vec<Vec<f64>> = (0..t_len).map(|t| cfg.occupancy(t)).collect();
    let pickers: Vec<WeightedIndex<f64>> = occupancy
        .iter()
        .map(|row| WeightedIndex::new(row).map_err(|e| config(format!("attraction: {e}"))))
        .collect::<Result<_>>()?;
    let counts: Vec<usize> = cfg.visited_bs_distribution.keys().copied().collect();
    let count_picker = WeightedIndex::new(cfg.visited_bs_distribution.values())
        .map_err(|e| config(format!("visited_bs_distribution: {e}")))?;

    // For each transition t-1 -> t: per-cell leave probability and the
    // destination distribution for leavers.
    let mut leave = vec![vec![0.0; cfg.num_cells]; t_len];
    let mut arrive: Vec<Option<WeightedIndex<f64>>> = vec![None; t_len];
    if cfg.rebalance {
        for t in 1..t_len {
            let (prev, cur) = (&occupancy[t - 1], &occupancy[t]);
            let deficit: Vec<f64> = prev.iter().zip(cur).map(|(a, b)| (b - a).max(0.0)).collect();
            for s in 0..cfg.num_cells {
                if prev[s] > 0.0 {
                    leave[t][s] = ((prev[s] - cur[s]).max(0.0) / prev[s]).min(1.0);
                }
            }
            if deficit.iter().any(|d| *d > 0.0) {
                arrive[t] = Some(WeightedIndex::new(&deficit).map_err(|e| config(e.to_string()))?);
            }
        }
    }

    let mut paths = Vec::with_capacity(n);
    let mut handover = vec![false; t_len];
    for _ in 0..n {
        let k = counts[count_picker.sample(rng)];
        let moves = (k - 1).min(t_len.saturating_sub(1));
        handover.iter_mut().for_each(|h| *h = false);
        if moves > 0 {
            for idx in rand::seq::index::sample(rng, t_len - 1, moves) {
                handover[idx + 1] = true;
            }
        }
        let mut path = Vec::with_capacity(t_len);
        let mut cell = pickers[0].sample(rng);
        path.push(cell);
        for t in 1..t_len {
            if handover[t] {
                cell = pickers[t].sample(rng);
            } else if let Some(dest) = &arrive[t] {
                let p = leave[t][cell];
                if p > 0.0 && rng.random::<f64>() < p {
                    cell = dest.sample(rng);
                }
            }
            path.push(cell);
        }
        paths.push(path);
    }
    Ok(paths)
}

#[derive(Debug, Serialize, Deserialize)]
struct PathRecord {
    user: usize,
    slot: usize,
    cell: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct ContactRecord {
    user: usize,
    slot: usize,
    deadline_min: u32,
    value: f64,
}

/// Writes paths as `user,slot,cell` rows.
pub fn write_cell_paths(path: &Path, paths: &[Vec<usize>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for (user, p) in paths.iter().enumerate() {
        for (slot, &cell) in p.iter().enumerate() {
            w.serialize(PathRecord { user, slot, cell })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads paths written by [`write_cell_paths`]; every user needs every slot.
pub fn read_cell_paths(path: &Path) -> Result<Vec<Vec<usize>>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut map: BTreeMap<usize, BTreeMap<usize, usize>> = BTreeMap::new();
    for rec in r.deserialize() {
        let rec: PathRecord = rec?;
        map.entry(rec.user).or_default().insert(rec.slot, rec.cell);
    }
    let mut out = Vec::with_capacity(map.len());
    for (expected, (user, slots)) in map.into_iter().enumerate() {
        if user != expected || slots.keys().enumerate().any(|(i, &s)| i != s) {
            return Err(config(format!("cell path table has gaps near user {user}")));
        }
        out.push(slots.into_values().collect());
    }
    Ok(out)
}

/// Writes contacts as `user,slot,deadline_min,value` rows.
pub fn write_contacts(path: &Path, contacts: &[ContactMatrix]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for (user, m) in contacts.iter().enumerate() {
        for (d, row) in m.deadlines().iter().zip(m.rows()) {
            for (slot, &value) in row.iter().enumerate() {
                w.serialize(ContactRecord {
                    user,
                    slot,
                    deadline_min: d.0,
                    value,
                })?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads contacts written by [`write_contacts`].
pub fn read_contacts(path: &Path) -> Result<Vec<ContactMatrix>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut map: BTreeMap<usize, BTreeMap<u32, BTreeMap<usize, f64>>> = BTreeMap::new();
    for rec in r.deserialize() {
        let rec: ContactRecord = rec?;
        map.entry(rec.user)
            .or_default()
            .entry(rec.deadline_min)
            .or_default()
            .insert(rec.slot, rec.value);
    }
    let mut out = Vec::with_capacity(map.len());
    for (expected, (user, rows)) in map.into_iter().enumerate() {
        if user != expected {
            return Err(config(format!("contact table is missing user {expected}")));
        }
        let deadlines = rows.keys().map(|&m| Deadline(m)).collect();
        let values = rows.into_values().map(|r| r.into_values().collect()).collect();
        out.push(ContactMatrix::new(deadlines, values)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_decreasing_contacts() {
        let d = vec![Deadline(0), Deadline(60)];
        assert!(ContactMatrix::new(d, vec![vec![0.5], vec![0.4]]).is_err());
    }

    #[test]
    fn zero_heterogeneity_gives_means() {
        let model = ContactModel {
            heterogeneity: 0.0,
            ..ContactModel::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (m, _) = generate_contacts(&model, 5, 24, 1.0, &mut rng).unwrap();
        for user in &m {
            for (row, mean) in user.rows().iter().zip(&model.mean_contact) {
                assert!(row.iter().all(|e| e == mean));
            }
        }
    }

    #[test]
    fn default_model_never_clamps() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (_, diag) =
            generate_contacts(&ContactModel::default(), 2000, 24, 1.0, &mut rng).unwrap();
        assert_eq!(diag.clamped, 0);
    }

    #[test]
    fn default_visited_mean() {
        let d = default_visited_distribution();
        let mean: f64 = d.iter().map(|(k, p)| *k as f64 * p).sum();
        assert!((mean - 2.4).abs() < 0.05, "{mean}");
    }

    #[test]
    fn single_cell_visit_without_rebalance_is_constant() {
        let mut cfg = SyntheticCity::new(6).build(24, 1.0).unwrap();
        cfg.visited_bs_distribution = BTreeMap::from([(1, 1.0)]);
        cfg.rebalance = false;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for p in generate_cell_paths(&cfg, 200, &mut rng).unwrap() {
            assert!(p.iter().all(|&c| c == p[0]));
        }
    }
}
