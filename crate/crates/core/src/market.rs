//! Aggregation of user responses into market-level quantities.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{contract, Result};
use crate::numeric::CompensatedSum;
use crate::pricing::PricingScheme;
use crate::scenario::{ModelConfig, UserProfile};
use crate::user_response::{respond, UserResponse};

/// Users per work unit in parallel evaluation. Fixed so results do not depend
/// on the thread count.
const CHUNK: usize = 256;

/// Market parameters needed for aggregation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketParams {
    pub num_cells: usize,
    pub capacity_per_cell: f64,
    pub eta: f64,
    pub theta: f64,
}

impl From<&ModelConfig> for MarketParams {
    fn from(c: &ModelConfig) -> Self {
        Self {
            num_cells: c.num_cells,
            capacity_per_cell: c.capacity_per_cell,
            eta: c.eta,
            theta: c.theta,
        }
    }
}

/// Aggregate outcome of one tariff.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarketOutcome {
    pub num_users: usize,
    pub capacity_per_cell: f64,
    /// `X(t)`: generated traffic per slot.
    pub total_x: Vec<f64>,
    /// `Y(t)`: expected 3G traffic per slot.
    pub total_y: Vec<f64>,
    /// Expected 3G load indexed by `[slot][cell]`.
    pub cell_load: Vec<Vec<f64>>,
    pub kappa_avg: f64,
    /// Largest single-cell, single-slot 3G load relative to total generated traffic.
    pub kappa_peak: f64,
    pub peak_cell_load: f64,
    pub total_payment: f64,
    pub network_cost: f64,
    pub revenue: f64,
    pub surplus: f64,
    pub welfare: f64,
    pub subscribers: usize,
    pub subscription_ratio: f64,
    /// Subscribers that defer part of their traffic, as a share of subscribers.
    pub adoption_fraction: f64,
    /// Payments per unit of generated traffic.
    pub payment_per_unit_traffic: f64,
    pub within_capacity: bool,
    pub feasible: bool,
    /// Set when no traffic is generated and the ratios default to zero.
    pub no_traffic: bool,
}

struct Accumulator {
    x: Vec<CompensatedSum>,
    y: Vec<CompensatedSum>,
    load: Vec<Vec<CompensatedSum>>,
    payment: CompensatedSum,
    net: CompensatedSum,
    gross: CompensatedSum,
    subscribers: usize,
    adopters: usize,
    users: usize,
}

impl Accumulator {
    fn new(num_slots: usize, num_cells: usize) -> Self {
        Self {
            x: vec![CompensatedSum::new(); num_slots],
            y: vec![CompensatedSum::new(); num_slots],
            load: vec![vec![CompensatedSum::new(); num_cells]; num_slots],
            payment: CompensatedSum::new(),
            net: CompensatedSum::new(),
            gross: CompensatedSum::new(),
            subscribers: 0,
            adopters: 0,
            users: 0,
        }
    }

    fn add(&mut self, r: &UserResponse, path: &[usize]) -> Result<()> {
        self.users += 1;
        if !r.subscribed {
            return Ok(());
        }
        self.subscribers += 1;
        self.adopters += usize::from(r.adopts_delayed);
        self.payment.add(r.payment);
        self.net.add(r.net_utility);
        self.gross.add(r.gross_utility);
        for t in 0..self.x.len() {
            self.x[t].add(r.x[t]);
            self.y[t].add(r.y[t]);
            let cell = path[t];
            let row = &mut self.load[t];
            if cell >= row.len() {
                return Err(contract(format!("cell id {cell} out of range")));
            }
            row[cell].add(r.y[t]);
        }
        Ok(())
    }

    fn merge(&mut self, other: Accumulator) {
        for (a, b) in self.x.iter_mut().zip(other.x) {
            a.add(b.value());
        }
        for (a, b) in self.y.iter_mut().zip(other.y) {
            a.add(b.value());
        }
        for (ra, rb) in self.load.iter_mut().zip(other.load) {
            for (a, b) in ra.iter_mut().zip(rb) {
                a.add(b.value());
            }
        }
        self.payment.add(other.payment.value());
        self.net.add(other.net.value());
        self.gross.add(other.gross.value());
        self.subscribers += other.subscribers;
        self.adopters += other.adopters;
        self.users += other.users;
    }

    fn finish(self, params: &MarketParams) -> MarketOutcome {
        let total_x: Vec<f64> = self.x.iter().map(CompensatedSum::value).collect();
        let total_y: Vec<f64> = self.y.iter().map(CompensatedSum::value).collect();
        let cell_load: Vec<Vec<f64>> = self
            .load
            .iter()
            .map(|r| r.iter().map(CompensatedSum::value).collect())
            .collect();
        let sum_x = crate::numeric::sum(&total_x);
        let sum_y = crate::numeric::sum(&total_y);
        let peak = cell_load
            .iter()
            .flatten()
            .copied()
            .fold(0.0f64, f64::max);
        let no_traffic = sum_x <= 0.0;
        let ratio = |v: f64| if no_traffic { 0.0 } else { v / sum_x };
        let payment = self.payment.value();
        let cost = params.eta * sum_y;
        let revenue = payment - cost;
        let surplus = self.net.value();
        let within_capacity = peak <= params.capacity_per_cell;
        MarketOutcome {
            num_users: self.users,
            capacity_per_cell: params.capacity_per_cell,
            kappa_avg: ratio(sum_y).min(1.0),
            kappa_peak: ratio(peak).min(1.0),
            peak_cell_load: peak,
            total_payment: payment,
            network_cost: cost,
            revenue,
            surplus,
            welfare: self.gross.value() - cost,
            subscribers: self.subscribers,
            subscription_ratio: if self.users == 0 {
                0.0
            } else {
                self.subscribers as f64 / self.users as f64
            },
            adoption_fraction: if self.subscribers == 0 {
                0.0
            } else {
                self.adopters as f64 / self.subscribers as f64
            },
            payment_per_unit_traffic: ratio(payment),
            within_capacity,
            feasible: within_capacity && revenue > 0.0,
            no_traffic,
            total_x,
            total_y,
            cell_load,
        }
    }
}

/// Sums responses into an outcome. `responses[i]` belongs to `profiles[i]`.
pub fn aggregate(
    responses: &[UserResponse],
    profiles: &[UserProfile],
    params: &MarketParams,
) -> Result<MarketOutcome> {
    if responses.len() != profiles.len() {
        return Err(contract("one response per user is required"));
    }
    let num_slots = profiles.first().map_or(0, UserProfile::num_slots);
    let mut acc = Accumulator::new(num_slots, params.num_cells);
    for (r, p) in responses.iter().zip(profiles) {
        acc.add(r, p.cell_path())?;
    }
    Ok(acc.finish(params))
}

/// Computes every user's response to `scheme` and aggregates, in parallel.
pub fn evaluate(profiles: &[UserProfile], scheme: &PricingScheme, params: &MarketParams) -> Result<MarketOutcome> {
    evaluate_with(profiles, params, |p| respond(p, scheme, params.theta))
}

/// Like [`evaluate`] with a custom per-user response function.
pub fn evaluate_with<F>(profiles: &[UserProfile], params: &MarketParams, f: F) -> Result<MarketOutcome>
where
    F: Fn(&UserProfile) -> Result<UserResponse> + Sync,
{
    let num_slots = profiles.first().map_or(0, UserProfile::num_slots);
    let partials: Vec<Accumulator> = profiles
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = Accumulator::new(num_slots, params.num_cells);
            for p in chunk {
                acc.add(&f(p)?, p.cell_path())?;
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut total = Accumulator::new(num_slots, params.num_cells);
    for part in partials {
        total.merge(part);
    }
    Ok(total.finish(params))
}

/// Per-slot variance of cell loads normalized by capacity.
pub fn cell_load_variance(outcome: &MarketOutcome) -> Result<Vec<f64>> {
    let c = outcome.capacity_per_cell;
    if !c.is_finite() {
        return Err(contract("cell load variance needs a finite capacity"));
    }
    let cells = outcome.cell_load.first().map_or(0, Vec::len);
    if cells < 2 {
        return Err(contract("cell load variance needs at least two cells"));
    }
    Ok(outcome
        .cell_load
        .iter()
        .map(|row| {
            let n = row.len() as f64;
            let mean = row.iter().map(|v| v / c).sum::<f64>() / n;
            row.iter().map(|v| (v / c - mean).powi(2)).sum::<f64>() / n
        })
        .collect())
}

/// Scalar summary of an outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeSummary {
    pub kappa_avg: f64,
    pub kappa_peak: f64,
    pub revenue: f64,
    pub surplus: f64,
    pub welfare: f64,
    pub subscription_ratio: f64,
    pub adoption_fraction: f64,
    pub payment_per_unit_traffic: f64,
    pub peak_cell_load: f64,
    pub feasible: bool,
}

impl From<&MarketOutcome> for OutcomeSummary {
    fn from(o: &MarketOutcome) -> Self {
        Self {
            kappa_avg: o.kappa_avg,
            kappa_peak: o.kappa_peak,
            revenue: o.revenue,
            surplus: o.surplus,
            welfare: o.welfare,
            subscription_ratio: o.subscription_ratio,
            adoption_fraction: o.adoption_fraction,
            payment_per_unit_traffic: o.payment_per_unit_traffic,
            peak_cell_load: o.peak_cell_load,
            feasible: o.feasible,
        }
    }
}

impl MarketOutcome {
    pub fn summary(&self) -> OutcomeSummary {
        OutcomeSummary::from(self)
    }

    /// One row per slot: `slot, X, Y, cell_0, ..., cell_{S-1}`.
    pub fn write_slot_table(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let cells = self.cell_load.first().map_or(0, Vec::len);
        let mut header = vec!["slot".to_string(), "x".to_string(), "y".to_string()];
        header.extend((0..cells).map(|s| format!("cell_{s}")));
        w.write_record(&header)?;
        for t in 0..self.total_x.len() {
            let mut row = vec![t.to_string(), self.total_x[t].to_string(), self.total_y[t].to_string()];
            row.extend(self.cell_load[t].iter().map(f64::to_string));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes the scalar summary as a one-row table.
    pub fn write_summary(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.serialize(self.summary())?;
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outcome_with_loads(rows: Vec<Vec<f64>>, capacity: f64) -> MarketOutcome {
        MarketOutcome {
            num_users: 0,
            capacity_per_cell: capacity,
            total_x: vec![0.0; rows.len()],
            total_y: rows.iter().map(|r| r.iter().sum()).collect(),
            cell_load: rows,
            kappa_avg: 0.0,
            kappa_peak: 0.0,
            peak_cell_load: 0.0,
            total_payment: 0.0,
            network_cost: 0.0,
            revenue: 0.0,
            surplus: 0.0,
            welfare: 0.0,
            subscribers: 0,
            subscription_ratio: 0.0,
            adoption_fraction: 0.0,
            payment_per_unit_traffic: 0.0,
            within_capacity: true,
            feasible: false,
            no_traffic: true,
        }
    }

    #[test]
    fn variance_examples() {
        let o = outcome_with_loads(vec![vec![0.0, 4.0]], 2.0);
        assert_eq!(cell_load_variance(&o).unwrap(), vec![1.0]);
        let o = outcome_with_loads(vec![vec![3.0, 3.0, 3.0]], 2.0);
        assert_eq!(cell_load_variance(&o).unwrap(), vec![0.0]);
    }
}
