//! Property and oracle suites behind `offload validate` and the acceptance
//! target. Each suite checks the engine against an independent route to the
//! same number: quadrature over the demand density instead of closed-form
//! antiderivatives, finite differences instead of analytic derivatives,
//! brute-force grids instead of closed-form best responses, and Monte-Carlo
//! markets instead of the single-cell closed forms.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::equilibrium::{solve_numeric, AnalyticParams, SolverOptions};
use crate::error::Result;
use crate::experiments::calibration::{homogeneous_population, Calibration, Population};
use crate::experiments::report::{CheckKind, FigureSuite};
use crate::experiments::sweep::ComparisonReport;
use crate::market::{evaluate, MarketOutcome, MarketParams};
use crate::mobility::ContactMatrix;
use crate::numeric::{bisect, linspace};
use crate::pricing::{PriceMatrix, PricingScheme, SchemeFamily};
use crate::scenario::{
    Deadline, DelayProfile, DelayScenario, DemandDistribution, RaisedCosine, UserParts, UserProfile,
};
use crate::user_response::{cap_constrained_allocation, respond_volume};

/// Outcome of one suite.
#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub id: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub budget: Option<Duration>,
    /// Failed only on checks listed in [`DOCUMENTED_DEVIATIONS`].
    pub documented: bool,
}

impl SuiteResult {
    pub fn line(&self) -> String {
        format!(
            "{} {}: {} ({:.2}s){}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.detail,
            self.elapsed.as_secs_f64(),
            if !self.passed && self.documented { " (documented deviation)" } else { "" }
        )
    }
}

/// Counts checks and keeps the first few failure messages.
#[derive(Default)]
struct Tally {
    checks: usize,
    failures: usize,
    worst: f64,
    notes: Vec<String>,
}

impl Tally {
    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures += 1;
            if self.notes.len() < 3 {
                self.notes.push(msg());
            }
        }
    }

    /// Records `|a - b| <= tol * max(|a|, |b|, floor)` and tracks the worst ratio.
    fn close(&mut self, what: &str, a: f64, b: f64, tol: f64, floor: f64) {
        let scale = a.abs().max(b.abs()).max(floor);
        let err = (a - b).abs() / scale;
        if err.is_finite() {
            self.worst = self.worst.max(err);
        }
        self.check(err <= tol, || format!("{what}: {a} vs {b} (rel {err:.2e})"));
    }

    fn finish(self, id: &'static str, start: Instant, budget: Option<Duration>, extra: String) -> SuiteResult {
        let elapsed = start.elapsed();
        let in_budget = budget.is_none_or(|b| elapsed <= b);
        let mut detail = format!("{} checks, {} violations", self.checks, self.failures);
        if self.worst > 0.0 {
            detail.push_str(&format!(", worst rel err {:.1e}", self.worst));
        }
        if !extra.is_empty() {
            detail.push_str(&format!(", {extra}"));
        }
        if let Some(b) = budget {
            if !in_budget {
                detail.push_str(&format!(", over the {:.0}s budget", b.as_secs_f64()));
            }
        }
        for n in &self.notes {
            detail.push_str(&format!("; {n}"));
        }
        SuiteResult {
            id,
            passed: self.failures == 0 && self.checks > 0 && in_budget,
            detail,
            elapsed,
            budget,
            documented: false,
        }
    }
}

/// Random single-cell parameters that satisfy the positive-revenue
/// condition and whose full-demand peak load exceeds capacity.
pub fn random_analytic_params<R: Rng + ?Sized>(rng: &mut R) -> AnalyticParams {
    let sigma = rng.random_range(0.2..0.8);
    let theta = rng.random_range(0.3..0.7);
    let phi_max = rng.random_range(5.0..200.0);
    let n_hat = rng.random_range(100.0..2000.0);
    let kappa_avg = rng.random_range(0.15..0.9);
    let kappa_peak = kappa_avg * rng.random_range(0.03..0.2);
    let eta = rng.random_range(0.02..0.5) / (kappa_avg * f64::powf(phi_max, 1.0 - theta));
    let mean = (1.0 - sigma) / (2.0 - sigma) * phi_max;
    let capacity = rng.random_range(0.2..0.9) * kappa_peak * n_hat * mean;
    AnalyticParams {
        n_hat,
        sigma,
        phi_max,
        theta,
        eta,
        capacity,
        kappa_avg,
        kappa_peak,
    }
}

/// `E[g(Phi); lo < Phi <= hi]` by double-exponential quadrature. Under
/// `u = phi^(1 - sigma)` the demand density is uniform, which keeps the
/// integrand smooth at the origin.
pub fn demand_expectation(p: &AnalyticParams, lo: f64, hi: f64, g: impl Fn(f64) -> f64) -> f64 {
    let e = 1.0 - p.sigma;
    let (ul, uh) = (lo.max(0.0).powf(e), hi.min(p.phi_max).powf(e));
    if uh <= ul {
        return 0.0;
    }
    let scale = g(hi.min(p.phi_max)).abs().max(1.0) * (uh - ul);
    let out = quadrature::double_exponential::integrate(|u| g(u.powf(1.0 / e)), ul, uh, 1e-15 * scale);
    out.integral / p.phi_max.powf(e)
}

/// Flat-tariff peak load by quadrature.
fn flat_peak_load_oracle(p: &AnalyticParams, fee: f64) -> f64 {
    let a = fee.powf(1.0 / p.theta);
    p.kappa_peak * p.n_hat * demand_expectation(p, a, p.phi_max, |x| x)
}

/// Flat revenue by quadrature, with the magnitude of its two terms.
fn flat_revenue_oracle(p: &AnalyticParams, fee: f64) -> (f64, f64) {
    let a = fee.powf(1.0 / p.theta);
    let income = p.n_hat * fee * demand_expectation(p, a, p.phi_max, |_| 1.0);
    let cost = p.n_hat * p.eta * p.kappa_avg * demand_expectation(p, a, p.phi_max, |x| x);
    (income - cost, income + cost)
}

/// Volume revenue by quadrature.
fn volume_revenue_oracle(p: &AnalyticParams, price: f64) -> f64 {
    let psi = (p.theta / (price * p.kappa_avg)).powf(1.0 / (1.0 - p.theta));
    let traffic = demand_expectation(p, 0.0, psi, |x| x) + psi * demand_expectation(p, psi, p.phi_max, |_| 1.0);
    (price - p.eta) * p.kappa_avg * p.n_hat * traffic
}

/// Closed-form threshold price and flat/volume revenue against quadrature
/// and root-finding oracles on 50 random parameter sets.
pub fn analytic_exactness(seed: u64) -> Result<SuiteResult> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tally::default();
    for _ in 0..50 {
        let p = random_analytic_params(&mut rng);
        let cap = p.flat_price_cap();
        let closed = p.flat_p_min();
        let root = bisect(|fee| flat_peak_load_oracle(&p, fee) - p.capacity, 0.0, cap, 1e-15);
        match root {
            Some(r) => t.close("p0", closed, r, 1e-9, 0.0),
            None => t.check(false, || "p0 oracle found no root".into()),
        }
        for _ in 0..10 {
            let fee = cap * rng.random_range(0.001..0.999);
            let (oracle, magnitude) = flat_revenue_oracle(&p, fee);
            t.close("flat R", p.flat_revenue(fee)?, oracle, 1e-9, magnitude);
        }
        let p_full = p.volume_full_demand_price();
        for _ in 0..10 {
            let price = p_full * f64::exp(rng.random_range(-1.0..3.0));
            let oracle = volume_revenue_oracle(&p, price);
            let magnitude = price.max(p.eta) * p.kappa_avg * p.n_hat * p.mean_demand().min(1.0);
            t.close("volume R", p.volume_revenue(price)?, oracle, 1e-9, magnitude * 1e-6);
        }
    }
    Ok(t.finish("analytic_exactness", start, Some(Duration::from_secs(1)), String::new()))
}

/// Analytic `R'`, `R''` (flat) and `R'/B` (volume) against central
/// differences at 100 interior points each.
pub fn derivative_checks(seed: u64) -> Result<SuiteResult> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tally::default();
    let mut done = 0;
    while done < 100 {
        let p = random_analytic_params(&mut rng);
        let cap = p.flat_price_cap();
        let fee = cap * rng.random_range(0.02..0.98);
        let h = 1e-6 * fee;
        let (r1, r2) = p.flat_revenue_derivatives(fee)?;
        let fd1 = (p.flat_revenue(fee + h)? - p.flat_revenue(fee - h)?) / (2.0 * h);
        let (r1_hi, _) = p.flat_revenue_derivatives(fee + h)?;
        let (r1_lo, _) = p.flat_revenue_derivatives(fee - h)?;
        let fd2 = (r1_hi - r1_lo) / (2.0 * h);
        t.close("flat R'", r1, fd1, 1e-6, 1e-4 * p.n_hat);
        t.close("flat R''", r2, fd2, 1e-6, 1e-4 * p.n_hat / fee);

        let p_full = p.volume_full_demand_price();
        let price = p.eta.max(p_full * 0.2) * f64::exp(rng.random_range(0.01..3.0));
        if (price / p_full - 1.0).abs() < 1e-4 {
            continue;
        }
        let h = 1e-6 * price;
        let fd = (p.volume_revenue(price + h)? - p.volume_revenue(price - h)?) / (2.0 * h) / p.volume_b(price)?;
        t.close("volume R'/B", p.volume_marginal_ratio(price)?, fd, 1e-6, 1e-4);
        done += 1;
    }
    Ok(t.finish("derivatives", start, None, String::new()))
}

/// One sign change of flat `R'` and strict decrease of volume `R'/B` on
/// 10^4-point grids over 20 parameter sets.
pub fn unimodality(seed: u64) -> Result<SuiteResult> {
    const GRID: usize = 10_000;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tally::default();
    for set in 0..20 {
        let p = random_analytic_params(&mut rng);
        t.check(p.eta_condition(), || format!("set {set}: eta condition fails"));
        let cap = p.flat_price_cap();
        let mut changes = 0;
        let mut last = 0.0f64;
        for k in 0..GRID {
            let fee = cap * (k as f64 + 0.5) / GRID as f64;
            let (r1, _) = p.flat_revenue_derivatives(fee)?;
            if r1 != 0.0 {
                if last != 0.0 && r1.signum() != last.signum() {
                    changes += 1;
                }
                last = r1;
            }
        }
        t.check(changes == 1, || format!("set {set}: flat R' changes sign {changes} times"));

        // R'/B is exactly 1 where every user consumes the full demand, so the
        // strict check starts where the per-user ceiling binds.
        let lo = p.eta.max(p.volume_full_demand_price());
        let opt = p.solve_volume()?.price().unwrap_or(lo);
        let hi = 10.0 * opt.max(lo);
        let mut prev = f64::INFINITY;
        let mut strict = true;
        for k in 1..=GRID {
            let price = lo + (hi - lo) * k as f64 / GRID as f64;
            let r = p.volume_marginal_ratio(price)?;
            strict &= r < prev;
            prev = r;
        }
        t.check(strict, || format!("set {set}: volume R'/B not strictly decreasing"));
    }
    Ok(t.finish("unimodality", start, Some(Duration::from_secs(10)), String::new()))
}

/// Net utility of a user with daily demand `phi` under the analytic
/// optimum of `family`.
fn analytic_net_utility(p: &AnalyticParams, family: SchemeFamily, price: f64, phi: f64) -> f64 {
    match family {
        SchemeFamily::Flat => (phi.powf(p.theta) - price).max(0.0),
        _ => {
            let q = price * p.kappa_avg;
            let x = phi.min((p.theta / q).powf(1.0 / (1.0 - p.theta)));
            x.powf(p.theta) - q * x
        }
    }
}

/// Equilibrium revenue, surplus, welfare and every user's net utility do
/// not fall as the 3G ratios shrink, in tight and unconstrained capacity
/// regimes; flat fee and volume payment per unit traffic do not rise.
pub fn comparative_statics(seed: u64) -> Result<SuiteResult> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tally::default();
    let (mut saturated, mut unsaturated) = (0usize, 0usize);
    for set in 0..20 {
        let base = random_analytic_params(&mut rng);
        for regime in ["tight", "unconstrained"] {
            let mut p = base;
            if regime == "tight" {
                p.capacity = base.capacity * rng.random_range(0.1..0.5);
            } else {
                p.capacity = f64::INFINITY;
            }
            for family in [SchemeFamily::Flat, SchemeFamily::Volume] {
                let mut prev: Option<(f64, f64, f64, f64, Vec<f64>)> = None;
                for s in linspace(1.0, 0.4, 10) {
                    let mut q = p;
                    q.kappa_avg = base.kappa_avg * s;
                    q.kappa_peak = base.kappa_peak * s;
                    let eq = if family == SchemeFamily::Flat { q.solve_flat()? } else { q.solve_volume()? };
                    let Some(opt) = eq.optimum else {
                        t.check(false, || format!("set {set} {regime} {family}: no optimum"));
                        break;
                    };
                    match eq.saturation {
                        crate::equilibrium::Saturation::OptSaturated => saturated += 1,
                        _ => unsaturated += 1,
                    }
                    let charge = if family == SchemeFamily::Flat {
                        opt.price
                    } else {
                        opt.payment_per_unit_traffic
                    };
                    let nets: Vec<f64> = linspace(q.phi_max * 1e-3, q.phi_max, 50)
                        .into_iter()
                        .map(|phi| analytic_net_utility(&q, family, opt.price, phi))
                        .collect();
                    if let Some((r, su, w, c, n)) = &prev {
                        let ctx = || format!("set {set} {regime} {family} s={s:.3}");
                        let up = |a: f64, b: f64| b >= a - 1e-9 * a.abs().max(1e-12);
                        t.check(up(*r, opt.revenue), || format!("{}: revenue fell", ctx()));
                        t.check(up(*su, opt.surplus), || format!("{}: surplus fell", ctx()));
                        t.check(up(*w, opt.welfare), || format!("{}: welfare fell", ctx()));
                        t.check(up(charge, *c), || format!("{}: price rose", ctx()));
                        let all = n.iter().zip(&nets).all(|(a, b)| up(*a, *b));
                        t.check(all, || format!("{}: a user's net utility fell", ctx()));
                    }
                    prev = Some((opt.revenue, opt.surplus, opt.welfare, charge, nets));
                }
            }
        }
    }
    let extra = format!("{saturated} opt-saturated and {unsaturated} opt-unsaturated points");
    Ok(t.finish("comparative_statics", start, None, extra))
}

/// Single-cell daily usage pattern used by the simulation check.
fn usage_pattern() -> Vec<f64> {
    RaisedCosine {
        peak_hour: 20.0,
        peak_to_trough: 4.0,
    }
    .sampled(24, 1.0)
}

/// Homogeneous 10^4-user Monte-Carlo markets against the closed-form
/// optimum price and revenue for flat and volume on 20 parameter sets.
pub fn simulation_agreement(seed: u64, opts: &SolverOptions) -> Result<SuiteResult> {
    const USERS: usize = 10_000;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tally::default();
    let pattern = usage_pattern();
    let total: f64 = pattern.iter().sum();
    let peak_weight = pattern.iter().cloned().fold(0.0, f64::max) / total;
    // Homogeneous revenue is unimodal, so a coarser volume scan ahead of the
    // golden-section refinement loses nothing and keeps the suite in budget.
    let opts = SolverOptions {
        volume_grid: opts.volume_grid.min(60),
        ..opts.clone()
    };
    let mut saturated = 0;
    for set in 0..20u64 {
        let mut p = random_analytic_params(&mut rng);
        // Most sets use the calibrated exponent, whose responses are cheap;
        // every fourth keeps a random one.
        if set % 4 != 3 {
            // Keep eta * kappa_avg * phi_max^(1 - theta) fixed so the
            // positive-revenue condition still holds.
            let ratio = p.eta * p.kappa_avg * p.phi_max.powf(1.0 - p.theta);
            p.theta = 0.5;
            p.eta = ratio / (p.kappa_avg * p.phi_max.powf(1.0 - p.theta));
        }
        p.n_hat = USERS as f64;
        p.kappa_peak = p.kappa_avg * peak_weight;
        let full = p.kappa_peak * p.n_hat * p.mean_demand();
        p.capacity = if set % 2 == 0 { full * rng.random_range(0.3..0.8) } else { full * 2.0 };
        let demand = DemandDistribution::new(p.sigma, p.phi_max)?;
        let profiles =
            homogeneous_population(USERS, &demand, &pattern, 1.0 - p.kappa_avg, p.theta, seed + set, true)?;
        let params = MarketParams {
            num_cells: 1,
            capacity_per_cell: p.capacity,
            eta: p.eta,
            theta: p.theta,
        };
        for family in [SchemeFamily::Flat, SchemeFamily::Volume] {
            let analytic = if family == SchemeFamily::Flat { p.solve_flat()? } else { p.solve_volume()? };
            if analytic.saturation == crate::equilibrium::Saturation::OptSaturated {
                saturated += 1;
            }
            let numeric = solve_numeric(&profiles, &params, family, &opts)?;
            let price = match &numeric.scheme_at_optimum {
                Some(PricingScheme::Flat { fee }) => *fee,
                Some(PricingScheme::Volume { unit_price }) => *unit_price,
                _ => f64::NAN,
            };
            let label = format!("set {set} {family}");
            if analytic.optimum.is_none() {
                t.check(!numeric.is_feasible(), || format!("{label}: simulated market feasible, closed form not"));
                continue;
            }
            t.close(&format!("{label} price"), price, analytic.price().unwrap_or(f64::NAN), 0.02, 0.0);
            t.close(&format!("{label} revenue"), numeric.revenue(), analytic.revenue(), 0.02, 0.0);
        }
    }
    let extra = format!("{saturated} of 40 analytic optima opt-saturated");
    Ok(t.finish("simulation_agreement", start, Some(Duration::from_secs(60)), extra))
}

/// Per-slot 3G fraction computed from the profile's raw fields.
fn oracle_kappa(profile: &UserProfile) -> Vec<f64> {
    (0..profile.num_slots())
        .map(|t| {
            profile
                .delay_profile()
                .shares()
                .iter()
                .map(|(d, a)| a * (1.0 - profile.wifi_contact().get(*d, t).unwrap_or(0.0)))
                .sum()
        })
        .collect()
}

fn volume_net(profile: &UserProfile, kappa: &[f64], price: f64, theta: f64, x: &[f64]) -> f64 {
    let gamma = profile.willingness();
    x.iter()
        .enumerate()
        .map(|(t, &xt)| gamma[t] * xt.powf(theta) - price * kappa[t] * xt)
        .sum()
}

/// Two-slot user for the tier-1 brute force.
fn two_slot_user(phi: f64, w: f64, gamma: [f64; 2], kappa: [f64; 2]) -> Result<UserProfile> {
    let contact = ContactMatrix::new(vec![Deadline::ZERO], vec![vec![1.0 - kappa[0], 1.0 - kappa[1]]])?;
    UserProfile::new(
        UserParts {
            daily_demand: phi,
            temporal_weight: vec![w, 1.0 - w],
            willingness: gamma.to_vec(),
            delay_profile: DelayProfile::on_the_spot(),
            wifi_contact: contact,
            cell_path: vec![0, 0],
            disutility_factor: 0.0,
        },
        60.0,
    )
}

/// Closed-form volume responses against random perturbations and per-slot
/// grids; the tier-1 water-fill against a two-slot brute force.
pub fn best_response_oracles(seed: u64) -> Result<SuiteResult> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tally::default();
    let mut cal = Calibration::desk();
    cal.delay = crate::experiments::calibration::DelayAssignment::Scenario(DelayScenario::Long);
    let pop = Population::generate(&cal, seed)?;
    let theta = cal.model.theta;
    for profile in pop.profiles.iter().take(100) {
        let kappa = oracle_kappa(profile);
        let phi = profile.slot_demands();
        let gamma = profile.willingness();
        // Price at which the user's median slot switches from capped to interior.
        let mut switch: Vec<f64> = (0..phi.len())
            .filter(|&s| kappa[s] > 0.0 && phi[s] > 0.0)
            .map(|s| theta * gamma[s] / (kappa[s] * phi[s].powf(1.0 - theta)))
            .collect();
        switch.sort_by(f64::total_cmp);
        let price = switch.get(switch.len() / 2).copied().unwrap_or(1.0) * rng.random_range(0.3..3.0);
        let resp = respond_volume(profile, price, theta);
        let best = volume_net(profile, &kappa, price, theta, &resp.x);
        t.close("net utility", resp.net_utility, best, 1e-9, 1e-9);
        for _ in 0..1000 {
            let size = 10f64.powf(rng.random_range(-4.0..0.0));
            let x: Vec<f64> = resp
                .x
                .iter()
                .zip(&phi)
                .map(|(&xt, &cap)| {
                    let z: f64 = rng.sample(StandardNormal);
                    (xt + size * cap * z).clamp(0.0, cap)
                })
                .collect();
            let other = volume_net(profile, &kappa, price, theta, &x);
            t.check(other <= best + 1e-9, || format!("perturbation beats optimum by {}", other - best));
        }
        for s in 0..phi.len() {
            if phi[s] <= 0.0 {
                continue;
            }
            let obj = |x: f64| gamma[s] * x.powf(theta) - price * kappa[s] * x;
            let step = phi[s] / 10_000.0;
            let (mut xg, mut og) = (0.0, obj(0.0));
            for k in 1..=10_000 {
                let x = k as f64 * step;
                let o = obj(x);
                if o > og {
                    (xg, og) = (x, o);
                }
            }
            t.check((resp.x[s] - xg).abs() <= step * 1.000_001, || {
                format!("slot {s}: closed form {} vs grid {xg}", resp.x[s])
            });
            t.check(obj(resp.x[s]) >= og - 1e-12 * og.abs().max(1.0), || {
                format!("slot {s}: grid point beats closed form")
            });
        }
    }

    for _ in 0..100 {
        let theta = rng.random_range(0.3..0.7);
        let phi = rng.random_range(1.0..100.0);
        let w = rng.random_range(0.1..0.9);
        let gamma = [rng.random_range(0.1..1.0), rng.random_range(0.1..1.0)];
        let kappa = [rng.random_range(0.05..1.0), rng.random_range(0.05..1.0)];
        let user = two_slot_user(phi, w, gamma, kappa)?;
        let demand = [w * phi, (1.0 - w) * phi];
        let full = kappa[0] * demand[0] + kappa[1] * demand[1];
        let cap = full * rng.random_range(0.05..0.95);
        let plan = cap_constrained_allocation(&user, cap, theta);
        t.check(plan.volume <= cap * (1.0 + 1e-6), || format!("tier-1 plan uses {} > cap {cap}", plan.volume));
        let utility = |x0: f64, x1: f64| gamma[0] * x0.powf(theta) + gamma[1] * x1.powf(theta);
        let top = demand[0].min(cap / kappa[0]);
        let mut brute = (0.0, 0.0, f64::NEG_INFINITY);
        for k in 0..=100_000 {
            let x0 = top * k as f64 / 100_000.0;
            let x1 = demand[1].min(((cap - kappa[0] * x0) / kappa[1]).max(0.0));
            let u = utility(x0, x1);
            if u > brute.2 {
                brute = (x0, x1, u);
            }
        }
        t.close("tier-1 utility", plan.gross_utility, brute.2, 1e-3, 0.0);
        t.check(
            (plan.x[0] - brute.0).abs() <= 1e-3 * phi && (plan.x[1] - brute.1).abs() <= 1e-3 * phi,
            || format!("tier-1 plan {:?} vs brute force ({}, {})", plan.x, brute.0, brute.1),
        );
    }
    Ok(t.finish("best_response", start, None, String::new()))
}

/// Identities every market outcome must satisfy.
pub fn outcome_identities(outcome: &MarketOutcome) -> Vec<String> {
    let mut bad = Vec::new();
    if !(outcome.kappa_peak <= outcome.kappa_avg + 1e-12 && outcome.kappa_avg <= 1.0 + 1e-12) {
        bad.push(format!("kappa_peak {} kappa_avg {}", outcome.kappa_peak, outcome.kappa_avg));
    }
    let w = outcome.surplus + outcome.revenue;
    if (outcome.welfare - w).abs() > 1e-6 * outcome.welfare.abs().max(1e-9) {
        bad.push(format!("welfare {} vs surplus + revenue {w}", outcome.welfare));
    }
    for (t, row) in outcome.cell_load.iter().enumerate() {
        let s: f64 = row.iter().sum();
        if (s - outcome.total_y[t]).abs() > 1e-9 * outcome.total_y[t].abs().max(1e-9) {
            bad.push(format!("slot {t}: cell loads sum to {s}, Y = {}", outcome.total_y[t]));
        }
    }
    bad
}

/// Solves all four tariffs on the zero and long scenarios and checks the
/// outcome identities, the congestion-to-volume reduction and the revenue
/// dominance of the richer tariffs.
pub fn structural_identities(cal: &Calibration, seed: u64, opts: &SolverOptions) -> Result<SuiteResult> {
    let start = Instant::now();
    let mut t = Tally::default();
    let base = Population::generate(cal, seed)?;
    let params = cal.market_params();
    for scenario in [DelayScenario::Zero, DelayScenario::Long] {
        let pop = base.with_scenario(scenario)?;
        let mut revenue = std::collections::BTreeMap::new();
        for family in SchemeFamily::ALL {
            let eq = solve_numeric(&pop.profiles, &params, family, opts)?;
            if let Some(o) = &eq.outcome {
                for b in outcome_identities(o) {
                    t.check(false, || format!("{scenario:?} {family}: {b}"));
                }
                t.check(true, String::new);
            }
            if let Some(PricingScheme::Volume { unit_price }) = eq.scheme_at_optimum {
                let vol = evaluate(&pop.profiles, &PricingScheme::Volume { unit_price }, &params)?;
                let matrix = PriceMatrix::constant(cal.model.num_slots, cal.model.num_cells, unit_price)?;
                let con = evaluate(&pop.profiles, &PricingScheme::Congestion { unit_price: matrix }, &params)?;
                let pairs = [
                    ("revenue", vol.revenue, con.revenue),
                    ("surplus", vol.surplus, con.surplus),
                    ("welfare", vol.welfare, con.welfare),
                    ("kappa_avg", vol.kappa_avg, con.kappa_avg),
                    ("kappa_peak", vol.kappa_peak, con.kappa_peak),
                    ("peak load", vol.peak_cell_load, con.peak_cell_load),
                ];
                for (what, a, b) in pairs {
                    t.close(&format!("congestion(constant) {what}"), a, b, 1e-12, 1e-12);
                }
            }
            revenue.insert(family, eq.revenue());
        }
        let dominates = |rich: SchemeFamily, plain: SchemeFamily| revenue[&rich] >= revenue[&plain] * (1.0 - 1e-9);
        t.check(dominates(SchemeFamily::TwoTier, SchemeFamily::Flat), || {
            format!("{scenario:?}: two-tier below flat")
        });
        t.check(dominates(SchemeFamily::Congestion, SchemeFamily::Volume), || {
            format!("{scenario:?}: congestion below volume")
        });
    }
    Ok(t.finish("structural_identities", start, None, String::new()))
}

/// Identity checks on the per-seed points of sweep reports: ratio ordering,
/// the welfare identity and, where a report holds several tariffs at the
/// same point and seed, the dominance of two-tier over flat and congestion
/// over volume. Returns `(checks, violations)`.
pub fn report_identities(reports: &[&ComparisonReport]) -> (usize, Vec<String>) {
    let mut checks = 0;
    let mut bad = Vec::new();
    for report in reports {
        for p in &report.points {
            if !p.feasible {
                continue;
            }
            checks += 2;
            if !(p.kappa_peak <= p.kappa_avg + 1e-12 && p.kappa_avg <= 1.0 + 1e-12) {
                bad.push(format!("{} {} seed {}: kappa ordering", p.value, p.family, p.seed));
            }
            if (p.welfare - p.surplus - p.revenue).abs() > 1e-6 * p.welfare.abs().max(1e-9) {
                bad.push(format!("{} {} seed {}: welfare identity", p.value, p.family, p.seed));
            }
        }
        for (rich, plain) in [
            (SchemeFamily::TwoTier, SchemeFamily::Flat),
            (SchemeFamily::Congestion, SchemeFamily::Volume),
        ] {
            for r in report.points.iter().filter(|p| p.family == rich) {
                let Some(q) = report
                    .points
                    .iter()
                    .find(|q| q.family == plain && q.value == r.value && q.seed == r.seed)
                else {
                    continue;
                };
                checks += 1;
                if r.revenue < q.revenue * (1.0 - 1e-9) {
                    bad.push(format!("{} seed {}: {rich} below {plain}", r.value, r.seed));
                }
            }
        }
    }
    (checks, bad)
}

/// Ordering checks that miss on the default calibration. They still print
/// as failures; callers may treat a run that fails only on these as known.
pub const DOCUMENTED_DEVIATIONS: [&str; 4] = [
    "revenue.volume_ge_flat.short",
    "revenue.volume_ge_flat.medium",
    "revenue.volume_ge_flat.long",
    "granularity.congestion_over_volume.shrinks",
];

/// Wall-clock budget of the desk-scale figure suite.
pub const FIGURE_BUDGET: Duration = Duration::from_secs(15 * 60);

/// Ordering checks of a finished figure suite that took `elapsed`.
pub fn figure_orderings(suite: &FigureSuite, elapsed: Duration) -> SuiteResult {
    let checks = suite.checks();
    let orderings: Vec<_> = checks.iter().filter(|c| c.kind == CheckKind::Ordering).collect();
    let failed: Vec<&str> = orderings.iter().filter(|c| !c.passed).map(|c| c.id.as_str()).collect();
    let bands = checks.iter().filter(|c| c.kind == CheckKind::Band).count();
    let bands_missed = checks.iter().filter(|c| c.kind == CheckKind::Band && !c.passed).count();
    let in_budget = elapsed <= FIGURE_BUDGET;
    let mut detail = format!(
        "{} orderings, {} violated; {bands_missed} of {bands} bands missed",
        orderings.len(),
        failed.len()
    );
    if !failed.is_empty() {
        detail.push_str(&format!(" ({})", failed.join(", ")));
    }
    if !in_budget {
        detail.push_str(&format!(", over the {:.0}s budget", FIGURE_BUDGET.as_secs_f64()));
    }
    SuiteResult {
        id: "figure_orderings",
        passed: failed.is_empty() && !orderings.is_empty() && in_budget,
        detail,
        elapsed,
        budget: Some(FIGURE_BUDGET),
        documented: in_budget && failed.iter().all(|id| DOCUMENTED_DEVIATIONS.contains(id)),
    }
}

/// [`report_identities`] over every report of a figure suite.
pub fn figure_identities(suite: &FigureSuite) -> SuiteResult {
    let start = Instant::now();
    let mut reports = vec![&suite.scenarios, &suite.congested, &suite.upgrade, &suite.granularity, &suite.mixes];
    reports.extend(suite.disutility.values());
    let (checks, bad) = report_identities(&reports);
    let mut t = Tally::default();
    for _ in 0..checks.saturating_sub(bad.len()) {
        t.check(true, String::new);
    }
    for b in bad {
        t.check(false, || b);
    }
    t.finish("sweep_identities", start, None, String::new())
}

/// Every suite except the figure orderings, which need the full sweep run.
pub fn run_all(cal: &Calibration, seed: u64, opts: &SolverOptions) -> Result<Vec<SuiteResult>> {
    Ok(vec![
        analytic_exactness(seed)?,
        derivative_checks(seed)?,
        unimodality(seed)?,
        comparative_statics(seed)?,
        simulation_agreement(seed, opts)?,
        best_response_oracles(seed)?,
        structural_identities(cal, seed, opts)?,
    ])
}
