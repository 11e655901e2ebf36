//! Users' best responses to each tariff.

use serde::Serialize;

use crate::error::Result;
use crate::numeric::{bisect_abs, pow, CompensatedSum};
use crate::pricing::{PriceMatrix, PricingScheme};
use crate::scenario::{Deadline, UserProfile};

/// One user's decision under a tariff.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UserResponse {
    /// Traffic generated per slot.
    pub x: Vec<f64>,
    /// Expected 3G traffic per transmission slot.
    pub y: Vec<f64>,
    pub subscribed: bool,
    pub adopts_delayed: bool,
    pub payment: f64,
    pub net_utility: f64,
    /// Utility before payment, including any delay disutility.
    pub gross_utility: f64,
    /// Chosen tier under two-tier pricing (1 or 2).
    pub tier: Option<u8>,
}

impl UserResponse {
    pub fn unsubscribed(num_slots: usize) -> Self {
        Self {
            x: vec![0.0; num_slots],
            y: vec![0.0; num_slots],
            subscribed: false,
            adopts_delayed: false,
            payment: 0.0,
            net_utility: 0.0,
            gross_utility: 0.0,
            tier: None,
        }
    }

    pub fn total_x(&self) -> f64 {
        self.x.iter().copied().collect::<CompensatedSum>().value()
    }

    pub fn total_y(&self) -> f64 {
        self.y.iter().copied().collect::<CompensatedSum>().value()
    }
}

/// `kappa(t) = sum_d alpha^d (1 - e^d(t))`.
pub fn effective_rate(profile: &UserProfile) -> &[f64] {
    profile.kappa()
}

/// Expected 3G traffic per transmission slot, wrapping past the end of the day.
pub fn expected_3g(x: &[f64], profile: &UserProfile) -> Vec<f64> {
    let t_len = x.len();
    let mut y = vec![0.0; t_len];
    for term in profile.deferral_terms() {
        for (t, (&xt, &r)) in x.iter().zip(&term.rate).enumerate() {
            y[(t + term.shift) % t_len] += r * xt;
        }
    }
    y
}

/// Maximizer of `gamma x^theta - cost x` on `[0, phi]`.
#[inline]
pub fn slot_optimum(gamma: f64, phi: f64, cost: f64, theta: f64) -> f64 {
    if phi <= 0.0 || gamma <= 0.0 {
        0.0
    } else if cost <= 0.0 {
        phi
    } else {
        phi.min(pow(theta * gamma / cost, 1.0 / (1.0 - theta)))
    }
}

fn finish(
    profile: &UserProfile,
    x: Vec<f64>,
    y: Vec<f64>,
    payment: f64,
    utility_scale: f64,
    theta: f64,
) -> UserResponse {
    let gross = utility_scale * profile.gross_utility(&x, theta);
    UserResponse {
        x,
        y,
        subscribed: true,
        adopts_delayed: !profile.delay_profile().is_on_the_spot(),
        payment,
        net_utility: gross - payment,
        gross_utility: gross,
        tier: None,
    }
}

/// Subscribe and consume the full demand iff the fee is strictly below the
/// gross utility of that demand.
pub fn respond_flat(profile: &UserProfile, fee: f64, theta: f64) -> UserResponse {
    let full = profile.full_utility(theta);
    if full - fee > 0.0 {
        let x = profile.slot_demands();
        let y = expected_3g(&x, profile);
        finish(profile, x, y, fee, 1.0, theta)
    } else {
        UserResponse::unsubscribed(profile.num_slots())
    }
}

/// Best response when generated traffic at slot `t` costs `cost[t]` per unit.
fn respond_unit_cost(profile: &UserProfile, cost: &[f64], utility_scale: f64, theta: f64) -> Vec<f64> {
    profile
        .willingness()
        .iter()
        .zip(cost)
        .enumerate()
        .map(|(t, (&g, &c))| slot_optimum(utility_scale * g, profile.slot_demand(t), c, theta))
        .collect()
}

/// Per-slot closed-form optimum at a uniform unit price.
pub fn respond_volume(profile: &UserProfile, unit_price: f64, theta: f64) -> UserResponse {
    let gamma = profile.willingness();
    let mut x = Vec::with_capacity(gamma.len());
    let mut gross = CompensatedSum::new();
    for (t, (&g, &k)) in gamma.iter().zip(profile.kappa()).enumerate() {
        let phi = profile.slot_demand(t);
        let cost = unit_price * k;
        let interior = slot_optimum(g, f64::INFINITY, cost, theta);
        if phi <= 0.0 || g <= 0.0 {
            x.push(0.0);
        } else if cost > 0.0 && interior < phi {
            // At the stationary point x^(1 - theta) = theta g / cost, so
            // g x^theta = cost x / theta without another power.
            x.push(interior);
            gross.add(cost * interior / theta);
        } else {
            x.push(phi);
            gross.add(g * pow(phi, theta));
        }
    }
    let y = expected_3g(&x, profile);
    let payment = unit_price * y.iter().copied().collect::<CompensatedSum>().value();
    let gross = gross.value();
    UserResponse {
        x,
        y,
        subscribed: true,
        adopts_delayed: !profile.delay_profile().is_on_the_spot(),
        payment,
        net_utility: gross - payment,
        gross_utility: gross,
        tier: None,
    }
}

/// Price a unit generated at each slot ends up paying, given where and when
/// each deferred share is sent over 3G.
pub fn congestion_unit_cost(profile: &UserProfile, prices: &PriceMatrix) -> Vec<f64> {
    let t_len = profile.num_slots();
    let path = profile.cell_path();
    let mut cost = vec![0.0; t_len];
    for term in profile.deferral_terms() {
        for (t, c) in cost.iter_mut().enumerate() {
            let dest = (t + term.shift) % t_len;
            *c += term.rate[t] * prices.get(dest, path[dest]);
        }
    }
    cost
}

pub fn respond_congestion(profile: &UserProfile, prices: &PriceMatrix, theta: f64) -> UserResponse {
    let cost = congestion_unit_cost(profile, prices);
    let x = respond_unit_cost(profile, &cost, 1.0, theta);
    let y = expected_3g(&x, profile);
    let path = profile.cell_path();
    let payment = y
        .iter()
        .enumerate()
        .map(|(t, v)| prices.get(t, path[t]) * v)
        .collect::<CompensatedSum>()
        .value();
    finish(profile, x, y, payment, 1.0, theta)
}

/// Utility-maximizing traffic whose expected 3G volume stays within `cap`.
#[derive(Debug, Clone, PartialEq)]
pub struct CappedPlan {
    pub x: Vec<f64>,
    pub gross_utility: f64,
    pub volume: f64,
}

/// Maximizes `sum gamma x^theta` subject to `sum kappa x <= cap` and
/// `0 <= x <= phi` by water-filling on the multiplier of the volume cap.
pub fn cap_constrained_allocation(profile: &UserProfile, cap: f64, theta: f64) -> CappedPlan {
    let phi = profile.slot_demands();
    let kappa = profile.kappa();
    let gamma = profile.willingness();
    let volume_of = |x: &[f64]| -> f64 {
        x.iter()
            .zip(kappa)
            .map(|(x, k)| x * k)
            .collect::<CompensatedSum>()
            .value()
    };
    let full = volume_of(&phi);
    if full <= cap {
        return CappedPlan {
            gross_utility: profile.gross_utility(&phi, theta),
            x: phi,
            volume: full,
        };
    }
    let exponent = 1.0 / (1.0 - theta);
    let alloc = |lambda: f64| -> Vec<f64> {
        (0..phi.len())
            .map(|t| slot_optimum(gamma[t], phi[t], lambda * kappa[t], theta))
            .collect()
    };
    // volume(lambda) is non-increasing; find the multiplier where it meets the cap.
    let excess = |log_l: f64| volume_of(&alloc(log_l.exp())) - cap;
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    while excess(lo) < 0.0 && lo > -700.0 {
        lo *= 2.0;
    }
    while excess(hi) > 0.0 && hi < 700.0 {
        hi *= 2.0;
    }
    let log_l = bisect_abs(excess, lo, hi, 1e-10).unwrap_or(hi);
    // Closed-form correction on the active set at that multiplier.
    let lambda = log_l.exp();
    let x_l = alloc(lambda);
    let mut capped_volume = 0.0;
    let mut free_weight = 0.0;
    let mut free = vec![false; phi.len()];
    for t in 0..phi.len() {
        if kappa[t] <= 0.0 || gamma[t] <= 0.0 {
            continue;
        }
        if x_l[t] >= phi[t] {
            capped_volume += kappa[t] * phi[t];
        } else {
            free[t] = true;
            free_weight += kappa[t] * pow(theta * gamma[t] / kappa[t], exponent);
        }
    }
    let mut x = x_l;
    if free_weight > 0.0 && cap > capped_volume {
        let level = (cap - capped_volume) / free_weight;
        for t in 0..phi.len() {
            if free[t] {
                x[t] = phi[t].min(level * pow(theta * gamma[t] / kappa[t], exponent));
            }
        }
    }
    let mut volume = volume_of(&x);
    if volume > cap {
        let shrink = cap / volume;
        for (xt, k) in x.iter_mut().zip(kappa) {
            if *k > 0.0 {
                *xt *= shrink;
            }
        }
        volume = volume_of(&x);
    }
    CappedPlan {
        gross_utility: profile.gross_utility(&x, theta),
        x,
        volume,
    }
}

/// Two-tier response with a precomputed tier-1 plan for `cap1`.
pub fn respond_two_tier_with_plan(
    profile: &UserProfile,
    scheme: &PricingScheme,
    plan: &CappedPlan,
    theta: f64,
) -> Result<UserResponse> {
    let mut best = UserResponse::unsubscribed(profile.num_slots());
    let full_x = profile.slot_demands();
    for (tier, x) in [(1u8, &plan.x), (2u8, &full_x)] {
        let y = expected_3g(x, profile);
        let payment = scheme.payment(&y, profile.cell_path())?;
        let gross = if tier == 1 {
            plan.gross_utility
        } else {
            profile.gross_utility(x, theta)
        };
        let net = gross - payment;
        if net > best.net_utility {
            let volume = y.iter().copied().collect::<CompensatedSum>().value();
            let actual_tier = if volume > plan_cap(scheme) { 2 } else { 1 };
            best = UserResponse {
                x: x.clone(),
                y,
                subscribed: true,
                adopts_delayed: !profile.delay_profile().is_on_the_spot(),
                payment,
                net_utility: net,
                gross_utility: gross,
                tier: Some(actual_tier),
            };
        }
    }
    Ok(best)
}

fn plan_cap(scheme: &PricingScheme) -> f64 {
    match scheme {
        PricingScheme::TwoTier { cap1, .. } => *cap1,
        _ => f64::INFINITY,
    }
}

/// Picks the best of: no subscription, the tier-1 capped plan, and the full
/// demand. Ties go to the cheaper option.
pub fn respond_two_tier(
    profile: &UserProfile,
    fee1: f64,
    fee2: f64,
    cap1: f64,
    theta: f64,
) -> Result<UserResponse> {
    let scheme = PricingScheme::TwoTier { fee1, fee2, cap1 };
    let plan = cap_constrained_allocation(profile, cap1, theta);
    respond_two_tier_with_plan(profile, &scheme, &plan, theta)
}

/// Volume-priced response when deferring traffic costs a fraction `factor`
/// of utility. The user compares deferring (scaled utility, own delay
/// profile) with sending everything on the spot (full utility, deadline-zero
/// contacts only) and defers only if that is strictly better.
pub fn respond_with_disutility(
    profile: &UserProfile,
    unit_price: f64,
    factor: f64,
    theta: f64,
) -> UserResponse {
    let delayed = {
        let cost: Vec<f64> = profile.kappa().iter().map(|k| unit_price * k).collect();
        let x = respond_unit_cost(profile, &cost, 1.0 - factor, theta);
        let y = expected_3g(&x, profile);
        let payment = unit_price * y.iter().copied().collect::<CompensatedSum>().value();
        finish(profile, x, y, payment, 1.0 - factor, theta)
    };
    if profile.delay_profile().is_on_the_spot() {
        // Nothing to defer, so there is nothing to lose either.
        let mut r = respond_volume(profile, unit_price, theta);
        r.adopts_delayed = false;
        return r;
    }
    let spot_kappa: Vec<f64> = match profile.wifi_contact().row(Deadline::ZERO) {
        Some(e0) => e0.iter().map(|e| 1.0 - e).collect(),
        None => vec![1.0; profile.num_slots()],
    };
    let cost: Vec<f64> = spot_kappa.iter().map(|k| unit_price * k).collect();
    let x = respond_unit_cost(profile, &cost, 1.0, theta);
    let y: Vec<f64> = x.iter().zip(&spot_kappa).map(|(x, k)| x * k).collect();
    let payment = unit_price * y.iter().copied().collect::<CompensatedSum>().value();
    let mut spot = finish(profile, x, y, payment, 1.0, theta);
    spot.adopts_delayed = false;

    let prefer_delayed = delayed.net_utility > spot.net_utility
        || (factor == 0.0 && delayed.net_utility >= spot.net_utility);
    if prefer_delayed {
        delayed
    } else {
        spot
    }
}

/// Best response to any tariff. A positive disutility factor on the profile
/// is honoured under volume pricing.
pub fn respond(profile: &UserProfile, scheme: &PricingScheme, theta: f64) -> Result<UserResponse> {
    Ok(match scheme {
        PricingScheme::Flat { fee } => respond_flat(profile, *fee, theta),
        PricingScheme::Volume { unit_price } => {
            if profile.disutility_factor() > 0.0 {
                respond_with_disutility(profile, *unit_price, profile.disutility_factor(), theta)
            } else {
                respond_volume(profile, *unit_price, theta)
            }
        }
        PricingScheme::TwoTier { fee1, fee2, cap1 } => {
            respond_two_tier(profile, *fee1, *fee2, *cap1, theta)?
        }
        PricingScheme::Congestion { unit_price } => respond_congestion(profile, unit_price, theta),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mobility::ContactMatrix;
    use crate::scenario::{DelayProfile, UserParts};
    use std::collections::BTreeMap;

    fn single_slot_user(gamma: f64, phi: f64, kappa: f64) -> UserProfile {
        let contacts = ContactMatrix::constant(vec![Deadline::ZERO], 1, 1.0 - kappa).unwrap();
        UserProfile::new(
            UserParts {
                daily_demand: phi,
                temporal_weight: vec![1.0],
                willingness: vec![gamma],
                delay_profile: DelayProfile::on_the_spot(),
                wifi_contact: contacts,
                cell_path: vec![0],
                disutility_factor: 0.0,
            },
            60.0,
        )
        .unwrap()
    }

    #[test]
    fn volume_interior_and_capped() {
        let u = single_slot_user(1.0, 2.0, 1.0);
        assert!((respond_volume(&u, 0.5, 0.5).x[0] - 1.0).abs() < 1e-12);
        let u = single_slot_user(1.0, 0.8, 1.0);
        assert_eq!(respond_volume(&u, 0.5, 0.5).x[0], 0.8);
    }

    #[test]
    fn tier_one_cap_binds() {
        let u = single_slot_user(1.0, 4.0, 0.5);
        let plan = cap_constrained_allocation(&u, 1.0, 0.5);
        assert!((plan.x[0] - 2.0).abs() < 1e-9);
        assert!((plan.gross_utility - 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn flat_strict_subscription() {
        let u = single_slot_user(1.0, 1.0, 1.0);
        let r = respond_flat(&u, 0.9, 0.5);
        assert!(r.subscribed);
        assert!((r.net_utility - 0.1).abs() < 1e-12);
        assert!(!respond_flat(&u, 1.0, 0.5).subscribed);
    }

    #[test]
    fn deferral_pays_destination_price() {
        let contacts =
            ContactMatrix::new(vec![Deadline::hours(1)], vec![vec![0.0, 0.0]]).unwrap();
        let u = UserProfile::new(
            UserParts {
                daily_demand: 2.0,
                temporal_weight: vec![0.5, 0.5],
                willingness: vec![1.0, 1.0],
                delay_profile: DelayProfile::new(BTreeMap::from([(Deadline::hours(1), 1.0)]))
                    .unwrap(),
                wifi_contact: contacts,
                cell_path: vec![0, 0],
                disutility_factor: 0.0,
            },
            60.0,
        )
        .unwrap();
        let prices = PriceMatrix::new(vec![vec![1.0], vec![2.0]]).unwrap();
        assert_eq!(congestion_unit_cost(&u, &prices), vec![2.0, 1.0]);
    }
}
