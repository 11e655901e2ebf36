//! Revenue maximization over heterogeneous populations.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{classify_saturation, EquilibriumResult, Saturation, SolverTrace};
use crate::error::Result;
use crate::market::{evaluate, MarketOutcome, MarketParams};
use crate::numeric::{geomspace, golden_section_max, linspace, CompensatedSum};
use crate::pricing::{PriceMatrix, PricingScheme, SchemeFamily};
use crate::scenario::UserProfile;
use crate::user_response::{
    cap_constrained_allocation, expected_3g, respond_congestion, CappedPlan, UserResponse,
};

/// Search resolutions and tolerances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub flat_grid: usize,
    pub volume_grid: usize,
    /// Relative tolerance of the golden-section refinement.
    pub golden_tol: f64,
    /// Consecutive revenue decreases that close the volume price bracket.
    pub volume_bracket_decreases: usize,
    pub two_tier_fee_grid: usize,
    pub two_tier_cap_grid: usize,
    pub two_tier_refine_rounds: usize,
    pub congestion_max_iter: usize,
    pub congestion_tol: f64,
    /// Run the per-(slot, cell) improvement pass after the parametric search.
    pub congestion_local_pass: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            flat_grid: 200,
            volume_grid: 200,
            golden_tol: 1e-6,
            volume_bracket_decreases: 5,
            two_tier_fee_grid: 30,
            two_tier_cap_grid: 20,
            two_tier_refine_rounds: 2,
            congestion_max_iter: 50,
            congestion_tol: 1e-4,
            congestion_local_pass: true,
        }
    }
}

/// Finds the revenue-maximizing tariff of `family`. Infeasible tariffs
/// (a cell over capacity, or revenue not positive) are never selected.
pub fn solve_numeric(
    profiles: &[UserProfile],
    params: &MarketParams,
    family: SchemeFamily,
    opts: &SolverOptions,
) -> Result<EquilibriumResult> {
    match family {
        SchemeFamily::Flat => solve_flat(profiles, params, opts),
        SchemeFamily::Volume => solve_volume(profiles, params, opts),
        SchemeFamily::TwoTier => solve_two_tier(profiles, params, opts),
        SchemeFamily::Congestion => solve_congestion(profiles, params, opts),
    }
}

/// Tracks every evaluation and the best feasible tariff seen.
struct Search<'a> {
    profiles: &'a [UserProfile],
    params: &'a MarketParams,
    trace: SolverTrace,
    best: Option<(PricingScheme, MarketOutcome)>,
}

impl<'a> Search<'a> {
    fn new(profiles: &'a [UserProfile], params: &'a MarketParams) -> Self {
        Self {
            profiles,
            params,
            trace: SolverTrace::default(),
            best: None,
        }
    }

    fn best_revenue(&self) -> f64 {
        self.best.as_ref().map_or(f64::NEG_INFINITY, |b| b.1.revenue)
    }

    fn offer(&mut self, scheme: PricingScheme, key: Vec<f64>, outcome: MarketOutcome) -> f64 {
        self.trace.evaluations += 1;
        self.trace.record(key, outcome.revenue, Some(outcome.feasible));
        if !outcome.feasible {
            return f64::NEG_INFINITY;
        }
        let r = outcome.revenue;
        if r > self.best_revenue() {
            self.best = Some((scheme, outcome));
        }
        r
    }

    fn eval(&mut self, scheme: PricingScheme, key: Vec<f64>) -> Result<f64> {
        let outcome = evaluate(self.profiles, &scheme, self.params)?;
        Ok(self.offer(scheme, key, outcome))
    }

    /// Evaluates many tariffs in parallel and records them in order.
    fn eval_many(&mut self, schemes: Vec<(PricingScheme, Vec<f64>)>) -> Result<Vec<f64>> {
        let outcomes: Vec<MarketOutcome> = schemes
            .par_iter()
            .map(|(s, _)| evaluate(self.profiles, s, self.params))
            .collect::<Result<_>>()?;
        Ok(schemes
            .into_iter()
            .zip(outcomes)
            .map(|((s, k), o)| self.offer(s, k, o))
            .collect())
    }

    fn finish(self, family: SchemeFamily, threshold: Option<f64>) -> EquilibriumResult {
        match self.best {
            None => EquilibriumResult::infeasible(family, self.trace),
            Some((scheme, outcome)) => EquilibriumResult {
                family,
                saturation: classify_saturation(Some(&outcome)),
                scheme_at_optimum: Some(scheme),
                outcome: Some(outcome),
                threshold_price: threshold,
                trace: self.trace,
            },
        }
    }
}

/// Counts separated local maxima of a grid profile; ripples shallower than
/// 1% of the smaller peak are merged.
fn count_modes(values: &[f64]) -> usize {
    let n = values.len();
    let mut peaks: Vec<usize> = Vec::new();
    for k in 0..n {
        let v = values[k];
        if !v.is_finite() {
            continue;
        }
        let left = if k > 0 { values[k - 1] } else { f64::NEG_INFINITY };
        let right = if k + 1 < n { values[k + 1] } else { f64::NEG_INFINITY };
        if v > left && v >= right {
            peaks.push(k);
        }
    }
    let mut modes = 0;
    let mut current: Option<usize> = None;
    for p in peaks {
        match current {
            None => {
                current = Some(p);
                modes = 1;
            }
            Some(c) => {
                let valley = values[c..=p].iter().copied().fold(f64::INFINITY, f64::min);
                let lower = values[c].min(values[p]);
                let depth = lower - valley;
                if depth > 0.01 * lower.abs() {
                    modes += 1;
                    current = Some(p);
                } else if values[p] > values[c] {
                    current = Some(p);
                }
            }
        }
    }
    modes
}

/// Grid scan followed by golden-section refinement between the neighbours of
/// the best grid point.
fn scan_and_refine<F>(
    search: &mut Search<'_>,
    grid: &[f64],
    make: F,
    tol: f64,
) -> Result<Vec<f64>>
where
    F: Fn(f64) -> PricingScheme,
{
    let values = search.eval_many(grid.iter().map(|&p| (make(p), vec![p])).collect())?;
    if count_modes(&values) > 1 {
        search.trace.multimodal = true;
        search
            .trace
            .notes
            .push("revenue grid shows more than one local maximum".into());
    }
    let best = values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k);
    if let Some(k) = best {
        let lo = grid[k.saturating_sub(1)];
        let hi = grid[(k + 1).min(grid.len() - 1)];
        let mut err = None;
        golden_section_max(
            |p| match search.eval(make(p), vec![p]) {
                Ok(v) => v,
                Err(e) => {
                    err.get_or_insert(e);
                    f64::NEG_INFINITY
                }
            },
            lo,
            hi,
            tol,
            200,
        );
        if let Some(e) = err {
            return Err(e);
        }
    }
    Ok(values)
}

/// Lowest feasible price along a one-dimensional family, located by
/// bisecting between the first feasible grid point and its predecessor.
fn threshold_from_grid<F>(
    profiles: &[UserProfile],
    params: &MarketParams,
    grid: &[f64],
    values: &[f64],
    make: F,
) -> Result<Option<f64>>
where
    F: Fn(f64) -> PricingScheme,
{
    let Some(first) = values.iter().position(|v| v.is_finite()) else {
        return Ok(None);
    };
    if first == 0 {
        return Ok(Some(grid[0]));
    }
    let (mut lo, mut hi) = (grid[first - 1], grid[first]);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if evaluate(profiles, &make(mid), params)?.feasible {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-10 * hi {
            break;
        }
    }
    Ok(Some(hi))
}

/// Flat revenue is piecewise linear in the fee with upward jumps only where a
/// user's full utility is crossed, so the optimum sits just below one of those
/// breakpoints. Users are ranked by full utility and every prefix is scored
/// with incremental cell loads; a fee of zero never earns revenue.
fn solve_flat(profiles: &[UserProfile], params: &MarketParams, _opts: &SolverOptions) -> Result<EquilibriumResult> {
    let theta = params.theta;
    let entries: Vec<(f64, Vec<f64>)> = profiles
        .par_iter()
        .map(|p| {
            let g = p.full_utility(theta);
            let y = expected_3g(&p.slot_demands(), p);
            (g, y)
        })
        .collect();
    let mut order: Vec<usize> = (0..profiles.len()).filter(|&i| entries[i].0 > 0.0).collect();
    order.sort_by(|&a, &b| entries[b].0.total_cmp(&entries[a].0).then(a.cmp(&b)));

    let mut search = Search::new(profiles, params);
    let num_slots = profiles.first().map_or(0, UserProfile::num_slots);
    let mut load = vec![vec![0.0f64; params.num_cells]; num_slots];
    let mut peak = 0.0f64;
    let mut total_y = CompensatedSum::new();
    // (fee, revenue) of the best feasible prefix, and of the best prefix ignoring capacity.
    let mut best: Option<(f64, f64)> = None;
    let mut best_uncapped = f64::NEG_INFINITY;
    let mut capacity_hit = false;
    let mut threshold = None;
    let mut k = 0;
    while k < order.len() {
        let g = entries[order[k]].0;
        // Users tied at this utility join together.
        let mut end = k;
        while end < order.len() && entries[order[end]].0 == g {
            let i = order[end];
            for (t, &y) in entries[i].1.iter().enumerate() {
                let cell = profiles[i].cell_path()[t];
                let l = &mut load[t][cell];
                *l += y;
                peak = peak.max(*l);
            }
            total_y.add(crate::numeric::sum(&entries[i].1));
            end += 1;
        }
        k = end;
        let fee = g * (1.0 - 4.0 * f64::EPSILON);
        let revenue = fee * k as f64 - params.eta * total_y.value();
        best_uncapped = best_uncapped.max(revenue);
        let within = peak <= params.capacity_per_cell;
        let feasible = within && revenue > 0.0 && !capacity_hit;
        search.trace.evaluations += 1;
        search.trace.record(vec![fee], revenue, Some(feasible));
        if !within {
            capacity_hit = true;
        }
        if feasible {
            threshold = Some(fee);
            if best.is_none_or(|(_, r)| revenue > r) {
                best = Some((fee, revenue));
            }
        }
    }
    let Some((fee, _)) = best else {
        return Ok(search.finish(SchemeFamily::Flat, None));
    };
    search.eval(PricingScheme::Flat { fee }, vec![fee])?;
    let binding = capacity_hit && threshold == Some(fee) && best_uncapped > best.map_or(0.0, |b| b.1);
    let mut result = search.finish(SchemeFamily::Flat, threshold);
    if binding && result.is_feasible() {
        result.saturation = Saturation::OptSaturated;
    }
    Ok(result)
}

/// Revenue-maximizing uniform unit price on a heterogeneous population.
fn solve_volume(profiles: &[UserProfile], params: &MarketParams, opts: &SolverOptions) -> Result<EquilibriumResult> {
    let mut search = Search::new(profiles, params);
    let make = |p: f64| PricingScheme::Volume { unit_price: p };
    let start = if params.eta > 0.0 { params.eta } else { 1e-6 };

    // Expand until revenue has fallen for enough consecutive doublings.
    let mut p = start;
    let mut prev = f64::NEG_INFINITY;
    let mut decreases = 0;
    let mut upper = start * 2.0;
    for _ in 0..200 {
        let outcome = evaluate(profiles, &make(p), params)?;
        let r = outcome.revenue;
        search.offer(make(p), vec![p], outcome);
        if r < prev && prev > 0.0 {
            decreases += 1;
        } else {
            decreases = 0;
        }
        prev = r;
        upper = p;
        if decreases >= opts.volume_bracket_decreases {
            break;
        }
        p *= 2.0;
    }
    if decreases < opts.volume_bracket_decreases {
        search
            .trace
            .notes
            .push("volume price bracket did not close".into());
    }
    let grid = geomspace(start, upper, opts.volume_grid.max(3));
    let values = scan_and_refine(&mut search, &grid, make, opts.golden_tol)?;
    let threshold = threshold_from_grid(profiles, params, &grid, &values, make)?;
    let mut result = search.finish(SchemeFamily::Volume, threshold);
    // A discrete population rarely lands exactly on capacity; the constraint
    // binds when a slightly lower price would overload a cell and pay more.
    if let Some(PricingScheme::Volume { unit_price }) = result.scheme_at_optimum {
        let below = evaluate(profiles, &make(unit_price * (1.0 - 1e-4)), params)?;
        if !below.within_capacity && below.revenue > result.revenue() {
            result.saturation = Saturation::OptSaturated;
        }
    }
    Ok(result)
}

/// Per-user quantities the two-tier ranking needs without rebuilding responses.
struct TierTables {
    full_utility: Vec<f64>,
    full_volume: Vec<f64>,
}

struct CapTable {
    cap: f64,
    utility: Vec<f64>,
    volume: Vec<f64>,
}

fn cap_table(profiles: &[UserProfile], cap: f64, theta: f64) -> CapTable {
    let plans: Vec<CappedPlan> = profiles
        .par_iter()
        .map(|p| cap_constrained_allocation(p, cap, theta))
        .collect();
    CapTable {
        cap,
        utility: plans.iter().map(|p| p.gross_utility).collect(),
        volume: plans.iter().map(|p| p.volume).collect(),
    }
}

/// Revenue of `(fee1, fee2, cap)` from the precomputed tables. Mirrors the
/// option ordering of the per-user two-tier response.
fn tier_revenue(tables: &TierTables, cap: &CapTable, fee1: f64, fee2: f64, eta: f64) -> f64 {
    let charge = |v: f64| {
        if v <= 0.0 {
            0.0
        } else if v <= cap.cap {
            fee1
        } else {
            fee2
        }
    };
    let mut total = CompensatedSum::new();
    for i in 0..tables.full_utility.len() {
        let mut best_net = 0.0;
        let mut pick: Option<(f64, f64)> = None;
        let (v1, v2) = (cap.volume[i], tables.full_volume[i]);
        let net1 = cap.utility[i] - charge(v1);
        if net1 > best_net {
            best_net = net1;
            pick = Some((charge(v1), v1));
        }
        let net2 = tables.full_utility[i] - charge(v2);
        if net2 > best_net {
            pick = Some((charge(v2), v2));
        }
        if let Some((pay, vol)) = pick {
            total.add(pay - eta * vol);
        }
    }
    total.value()
}

fn fee_grid(full_utility: &[f64], n: usize) -> Vec<f64> {
    let mut sorted: Vec<f64> = full_utility.iter().copied().filter(|v| *v > 0.0).collect();
    sorted.sort_by(f64::total_cmp);
    if sorted.is_empty() {
        return vec![0.0];
    }
    let mut grid: Vec<f64> = linspace(0.0, 0.995, n.max(2))
        .into_iter()
        .map(|q| sorted[((sorted.len() - 1) as f64 * q).round() as usize])
        .collect();
    grid[0] = 0.0;
    grid.dedup();
    grid
}

fn solve_two_tier(profiles: &[UserProfile], params: &MarketParams, opts: &SolverOptions) -> Result<EquilibriumResult> {
    let theta = params.theta;
    let flat = solve_flat(profiles, params, opts)?;
    let mut search = Search::new(profiles, params);
    search.trace.evaluations += flat.trace.evaluations;

    let tables = TierTables {
        full_utility: profiles.iter().map(|p| p.full_utility(theta)).collect(),
        full_volume: profiles
            .iter()
            .map(|p| {
                p.kappa()
                    .iter()
                    .enumerate()
                    .map(|(t, k)| k * p.slot_demand(t))
                    .sum()
            })
            .collect(),
    };
    let mut volumes: Vec<f64> = tables.full_volume.iter().copied().filter(|v| *v > 0.0).collect();
    if volumes.is_empty() {
        return Ok(search.finish(SchemeFamily::TwoTier, None));
    }
    volumes.sort_by(f64::total_cmp);
    let cap_lo = volumes[((volumes.len() - 1) as f64 * 0.02) as usize];
    let cap_hi = *volumes.last().unwrap();
    let caps = geomspace(cap_lo, cap_hi.max(cap_lo * 1.0001), opts.two_tier_cap_grid.max(2));

    // Flat is the two-tier tariff with equal fees.
    if let Some(PricingScheme::Flat { fee }) = flat.scheme_at_optimum {
        let seed = PricingScheme::TwoTier {
            fee1: fee,
            fee2: fee,
            cap1: cap_hi,
        };
        search.eval(seed, vec![fee, fee, cap_hi])?;
    }

    let fees = fee_grid(&tables.full_utility, opts.two_tier_fee_grid);
    let cap_tables: Vec<CapTable> = caps.iter().map(|&c| cap_table(profiles, c, theta)).collect();
    let mut ranked: Vec<(f64, f64, f64, usize)> = Vec::new();
    for (j, ct) in cap_tables.iter().enumerate() {
        for (a, &f1) in fees.iter().enumerate() {
            for &f2 in &fees[a..] {
                let r = tier_revenue(&tables, ct, f1, f2, params.eta);
                ranked.push((r, f1, f2, j));
            }
        }
    }
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut chosen: Option<(f64, f64, f64)> = None;
    for &(r, f1, f2, j) in &ranked {
        if r <= 0.0 || r <= search.best_revenue() {
            search.trace.record(vec![f1, f2, caps[j]], r, None);
            continue;
        }
        if chosen.is_some() {
            search.trace.record(vec![f1, f2, caps[j]], r, None);
            continue;
        }
        let scheme = PricingScheme::TwoTier {
            fee1: f1,
            fee2: f2,
            cap1: caps[j],
        };
        if search.eval(scheme, vec![f1, f2, caps[j]])?.is_finite() {
            chosen = Some((f1, f2, caps[j]));
        }
    }

    // Pattern search around the incumbent.
    let incumbent = |s: &Search<'_>| match s.best.as_ref().map(|b| &b.0) {
        Some(PricingScheme::TwoTier { fee1, fee2, cap1 }) => Some((*fee1, *fee2, *cap1)),
        _ => None,
    };
    let fee_step0 = fees.windows(2).map(|w| w[1] - w[0]).fold(0.0f64, f64::max) / 2.0;
    let mut steps = (fee_step0, fee_step0, (cap_hi / cap_lo).ln() / caps.len() as f64);
    let mut table_cache: Vec<CapTable> = cap_tables;
    for _ in 0..opts.two_tier_refine_rounds {
        for _ in 0..20 {
            let Some((f1, f2, c)) = incumbent(&search) else { break };
            let mut improved = false;
            let candidates = [
                (f1 + steps.0, f2, c),
                ((f1 - steps.0).max(0.0), f2, c),
                (f1, f2 + steps.1, c),
                (f1, (f2 - steps.1).max(0.0), c),
                (f1, f2, c * steps.2.exp()),
                (f1, f2, c / steps.2.exp()),
            ];
            for (g1, g2, cap) in candidates {
                if g1 > g2 || cap <= 0.0 {
                    continue;
                }
                let ct = match table_cache.iter().position(|t| t.cap == cap) {
                    Some(k) => k,
                    None => {
                        table_cache.push(cap_table(profiles, cap, theta));
                        table_cache.len() - 1
                    }
                };
                let r = tier_revenue(&tables, &table_cache[ct], g1, g2, params.eta);
                if r > search.best_revenue() {
                    let scheme = PricingScheme::TwoTier {
                        fee1: g1,
                        fee2: g2,
                        cap1: cap,
                    };
                    if search.eval(scheme, vec![g1, g2, cap])?.is_finite() {
                        improved = true;
                        break;
                    }
                }
            }
            if !improved {
                break;
            }
        }
        steps = (steps.0 / 2.0, steps.1 / 2.0, steps.2 / 2.0);
    }
    Ok(search.finish(SchemeFamily::TwoTier, None))
}

fn congestion_matrix(base: f64, beta: f64, indicator: &[Vec<f64>]) -> PriceMatrix {
    let values = indicator
        .iter()
        .map(|row| row.iter().map(|i| (base * (1.0 + beta * i)).max(0.0)).collect())
        .collect();
    PriceMatrix::new(values).expect("nonnegative finite prices")
}

fn solve_congestion(profiles: &[UserProfile], params: &MarketParams, opts: &SolverOptions) -> Result<EquilibriumResult> {
    let volume = solve_volume(profiles, params, opts)?;
    let mut search = Search::new(profiles, params);
    search.trace.evaluations += volume.trace.evaluations;
    let (Some(PricingScheme::Volume { unit_price }), Some(vol_outcome)) =
        (volume.scheme_at_optimum.clone(), volume.outcome.clone())
    else {
        search.trace.notes.push("no feasible uniform price to start from".into());
        return Ok(search.finish(SchemeFamily::Congestion, None));
    };
    let num_slots = vol_outcome.cell_load.len();
    let peak = vol_outcome.peak_cell_load;
    let indicator: Vec<Vec<f64>> = vol_outcome
        .cell_load
        .iter()
        .map(|r| r.iter().map(|v| if peak > 0.0 { v / peak } else { 0.0 }).collect())
        .collect();

    let mut base = unit_price;
    let mut beta = 0.0;
    search.offer(
        PricingScheme::Congestion {
            unit_price: PriceMatrix::constant(num_slots, params.num_cells, base)?,
        },
        vec![base, beta],
        vol_outcome,
    );

    let eval_bb = |search: &mut Search<'_>, b: f64, be: f64, err: &mut Option<crate::Error>| -> f64 {
        let scheme = PricingScheme::Congestion {
            unit_price: congestion_matrix(b, be, &indicator),
        };
        match search.eval(scheme, vec![b, be]) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                f64::NEG_INFINITY
            }
        }
    };

    let mut err = None;
    let mut iterations = 0;
    loop {
        let before = search.best_revenue();
        // beta with base fixed
        let betas = linspace(-0.9, 4.0, 15);
        let vals: Vec<f64> = betas.iter().map(|&b| eval_bb(&mut search, base, b, &mut err)).collect();
        if let Some(k) = argmax(&vals) {
            let (lo, hi) = (betas[k.saturating_sub(1)], betas[(k + 1).min(betas.len() - 1)]);
            golden_section_max(|b| eval_bb(&mut search, base, b, &mut err), lo, hi, opts.golden_tol, 100);
        }
        if let Some((b, be)) = incumbent_bb(&search) {
            base = b;
            beta = be;
        }
        // base with beta fixed
        let bases = linspace(0.5 * base, 2.0 * base, 15);
        let vals: Vec<f64> = bases.iter().map(|&b| eval_bb(&mut search, b, beta, &mut err)).collect();
        if let Some(k) = argmax(&vals) {
            let (lo, hi) = (bases[k.saturating_sub(1)], bases[(k + 1).min(bases.len() - 1)]);
            golden_section_max(|b| eval_bb(&mut search, b, beta, &mut err), lo, hi, opts.golden_tol, 100);
        }
        if let Some((b, be)) = incumbent_bb(&search) {
            base = b;
            beta = be;
        }
        if let Some(e) = err.take() {
            return Err(e);
        }
        iterations += 1;
        let after = search.best_revenue();
        if after - before <= opts.congestion_tol * before.abs() || iterations >= opts.congestion_max_iter {
            break;
        }
    }

    if opts.congestion_local_pass {
        if let Some((PricingScheme::Congestion { unit_price }, _)) = search.best.clone() {
            let refined = local_price_pass(profiles, params, unit_price, opts, &mut search.trace)?;
            search.eval(PricingScheme::Congestion { unit_price: refined }, vec![f64::NAN, f64::NAN])?;
        }
    }
    Ok(search.finish(SchemeFamily::Congestion, None))
}

fn argmax(values: &[f64]) -> Option<usize> {
    values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
}

fn incumbent_bb(search: &Search<'_>) -> Option<(f64, f64)> {
    search
        .trace
        .points
        .iter()
        .filter(|p| p.feasible == Some(true) && p.params.len() == 2)
        .max_by(|a, b| a.revenue.total_cmp(&b.revenue))
        .map(|p| (p.params[0], p.params[1]))
}

/// Multiplicative coordinate search over individual `(slot, cell)` prices.
/// Only users located in the cell at that slot are re-evaluated per trial.
fn local_price_pass(
    profiles: &[UserProfile],
    params: &MarketParams,
    start: PriceMatrix,
    opts: &SolverOptions,
    trace: &mut SolverTrace,
) -> Result<PriceMatrix> {
    let theta = params.theta;
    let (t_len, cells) = (start.num_slots(), start.num_cells());
    let mut members: Vec<Vec<Vec<usize>>> = vec![vec![Vec::new(); cells]; t_len];
    for (i, p) in profiles.iter().enumerate() {
        for (t, &s) in p.cell_path().iter().enumerate() {
            members[t][s].push(i);
        }
    }
    let mut prices = start;
    let mut responses: Vec<UserResponse> = profiles
        .par_iter()
        .map(|p| respond_congestion(p, &prices, theta))
        .collect();
    let mut load = vec![vec![0.0; cells]; t_len];
    let mut payment = 0.0;
    let mut volume = 0.0;
    for (r, p) in responses.iter().zip(profiles) {
        payment += r.payment;
        for (t, &s) in p.cell_path().iter().enumerate() {
            load[t][s] += r.y[t];
            volume += r.y[t];
        }
    }
    let mut revenue = payment - params.eta * volume;
    let mut step = 0.1;
    for _sweep in 0..opts.congestion_max_iter {
        let sweep_start = revenue;
        for t in 0..t_len {
            for s in 0..cells {
                if members[t][s].is_empty() {
                    continue;
                }
                for dir in [1.0 + step, 1.0 - step] {
                    let old_price = prices.get(t, s);
                    let new_price = old_price * dir;
                    if old_price <= 0.0 {
                        continue;
                    }
                    prices.set(t, s, new_price);
                    let trial: Vec<UserResponse> = members[t][s]
                        .iter()
                        .map(|&i| respond_congestion(&profiles[i], &prices, theta))
                        .collect();
                    let mut d_pay = 0.0;
                    let mut d_vol = 0.0;
                    let mut new_load = load.clone();
                    for (&i, r) in members[t][s].iter().zip(&trial) {
                        let old = &responses[i];
                        d_pay += r.payment - old.payment;
                        for (tt, &ss) in profiles[i].cell_path().iter().enumerate() {
                            let dy = r.y[tt] - old.y[tt];
                            new_load[tt][ss] += dy;
                            d_vol += dy;
                        }
                    }
                    let new_revenue = revenue + d_pay - params.eta * d_vol;
                    let peak = new_load.iter().flatten().copied().fold(0.0f64, f64::max);
                    if new_revenue > revenue && new_revenue > 0.0 && peak <= params.capacity_per_cell {
                        revenue = new_revenue;
                        load = new_load;
                        for (&i, r) in members[t][s].iter().zip(trial) {
                            responses[i] = r;
                        }
                        break;
                    }
                    prices.set(t, s, old_price);
                }
            }
        }
        trace.evaluations += 1;
        if revenue - sweep_start <= opts.congestion_tol * sweep_start.abs() {
            step /= 2.0;
            if step < 0.005 {
                break;
            }
        }
    }
    trace.notes.push(format!("local price pass ended at revenue {revenue:.6}"));
    Ok(prices)
}
