//! Closed forms for a single cell of statistically identical users whose
//! daily demand follows a truncated power law, whose temporal preference
//! matches the common usage pattern, and whose 3G ratios are summarized by
//! `kappa_avg` and `kappa_peak`.

use serde::{Deserialize, Serialize};

use super::Saturation;
use crate::error::{config, Error, Result};
use crate::numeric::bisect;
use crate::pricing::SchemeFamily;

/// Relative tolerance for the analytic root finders; bisection runs until the
/// bracket stops shrinking in floating point.
const ROOT_TOL: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyticParams {
    /// Users per cell.
    pub n_hat: f64,
    pub sigma: f64,
    pub phi_max: f64,
    pub theta: f64,
    pub eta: f64,
    pub capacity: f64,
    pub kappa_avg: f64,
    pub kappa_peak: f64,
}

/// Equilibrium quantities at one price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticPoint {
    pub price: f64,
    pub revenue: f64,
    pub surplus: f64,
    pub welfare: f64,
    pub subscription_ratio: f64,
    /// Total generated traffic.
    pub traffic: f64,
    /// Peak-slot expected 3G load.
    pub peak_load: f64,
    pub payment_per_unit_traffic: f64,
}

/// Provider optimum for the flat or volume tariff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticEquilibrium {
    pub family: SchemeFamily,
    pub saturation: Saturation,
    /// Infimum of the feasible price set.
    pub threshold_price: f64,
    /// Lowest price at which the capacity constraint holds.
    pub p_min: f64,
    /// Whether the threshold price itself is feasible.
    pub threshold_attainable: bool,
    pub optimum: Option<AnalyticPoint>,
}

impl AnalyticEquilibrium {
    pub fn price(&self) -> Option<f64> {
        self.optimum.map(|o| o.price)
    }

    pub fn revenue(&self) -> f64 {
        self.optimum.map_or(0.0, |o| o.revenue)
    }
}

impl AnalyticParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("n_hat", self.n_hat),
            ("phi_max", self.phi_max),
            ("capacity", self.capacity),
            ("kappa_avg", self.kappa_avg),
            ("kappa_peak", self.kappa_peak),
        ];
        for (what, v) in positive {
            if !(v > 0.0) {
                return Err(config(format!("{what} must be positive, got {v}")));
            }
        }
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return Err(Error::Domain {
                what: "sigma",
                value: self.sigma,
                domain: "(0, 1)",
            });
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::Domain {
                what: "theta",
                value: self.theta,
                domain: "(0, 1)",
            });
        }
        if !(self.eta >= 0.0) {
            return Err(config("eta must be nonnegative"));
        }
        if !(self.kappa_peak <= self.kappa_avg && self.kappa_avg <= 1.0) {
            return Err(config("need kappa_peak <= kappa_avg <= 1"));
        }
        Ok(())
    }

    pub fn normalizer(&self) -> f64 {
        self.phi_max.powf(1.0 - self.sigma) / (1.0 - self.sigma)
    }

    pub fn mean_demand(&self) -> f64 {
        (1.0 - self.sigma) / (2.0 - self.sigma) * self.phi_max
    }

    /// Flat fee above which nobody subscribes.
    pub fn flat_price_cap(&self) -> f64 {
        self.phi_max.powf(self.theta)
    }

    /// Whether `eta < 1 / (kappa_avg * phi_max^(1 - theta))`.
    pub fn eta_condition(&self) -> bool {
        self.eta * self.kappa_avg * self.phi_max.powf(1.0 - self.theta) < 1.0
    }

    fn check_flat_domain(&self, p: f64, open_left: bool) -> Result<()> {
        let cap = self.flat_price_cap();
        let ok = if open_left { p > 0.0 && p < cap } else { p >= 0.0 && p <= cap };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain {
                what: "flat price",
                value: p,
                domain: if open_left { "(0, phi_max^theta)" } else { "[0, phi_max^theta]" },
            })
        }
    }

    /// Demand of the marginal subscriber at fee `p`.
    fn flat_threshold_demand(&self, p: f64) -> f64 {
        p.powf(1.0 / self.theta).min(self.phi_max)
    }

    /// Fee income minus network cost per cell.
    pub fn flat_revenue(&self, p: f64) -> Result<f64> {
        self.check_flat_domain(p, false)?;
        if p == self.flat_price_cap() {
            return Ok(0.0);
        }
        let (s, th, z, n) = (self.sigma, self.theta, self.normalizer(), self.n_hat);
        let income = n * p * (1.0 - p.powf((1.0 - s) / th) / (z * (1.0 - s)));
        let cost = self.eta * self.kappa_avg * n
            * (self.phi_max.powf(2.0 - s) - p.powf((2.0 - s) / th))
            / (z * (2.0 - s));
        Ok(income - cost)
    }

    /// `(R'(p), R''(p))` for the flat tariff.
    pub fn flat_revenue_derivatives(&self, p: f64) -> Result<(f64, f64)> {
        self.check_flat_domain(p, true)?;
        Ok((self.flat_r1(p), self.flat_r2(p)))
    }

    fn flat_r1(&self, p: f64) -> f64 {
        let (s, th, z, n) = (self.sigma, self.theta, self.normalizer(), self.n_hat);
        n * (1.0 - (1.0 + (1.0 - s) / th) * p.powf((1.0 - s) / th) / (z * (1.0 - s))
            + self.eta * self.kappa_avg * p.powf((2.0 - s) / th - 1.0) / (z * th))
    }

    fn flat_r2(&self, p: f64) -> f64 {
        let (s, th, z, n) = (self.sigma, self.theta, self.normalizer(), self.n_hat);
        n * p.powf((1.0 - s - th) / th)
            * (self.eta * self.kappa_avg * p.powf((1.0 - th) / th) * (2.0 - th - s) - (1.0 + th - s))
            / (z * th * th)
    }

    /// Price where `R''` changes sign; infinite when `eta = 0`.
    pub fn flat_inflection(&self) -> f64 {
        let (s, th) = (self.sigma, self.theta);
        ((1.0 + th - s) / (self.eta * self.kappa_avg * (2.0 - th - s))).powf(th / (1.0 - th))
    }

    /// Expected peak-slot 3G load at fee `p`.
    pub fn flat_peak_load(&self, p: f64) -> f64 {
        let a = self.flat_threshold_demand(p);
        let s = self.sigma;
        self.kappa_peak * self.n_hat * (self.phi_max.powf(2.0 - s) - a.powf(2.0 - s))
            / (self.normalizer() * (2.0 - s))
    }

    pub fn flat_subscription_ratio(&self, p: f64) -> f64 {
        let a = self.flat_threshold_demand(p);
        1.0 - (a / self.phi_max).powf(1.0 - self.sigma)
    }

    pub fn flat_traffic(&self, p: f64) -> f64 {
        self.flat_peak_load(p) / self.kappa_peak
    }

    pub fn flat_surplus(&self, p: f64) -> f64 {
        let a = self.flat_threshold_demand(p);
        let (s, th) = (self.sigma, self.theta);
        let e = 1.0 + th - s;
        self.n_hat
            * ((self.phi_max.powf(e) - a.powf(e)) / (self.normalizer() * e)
                - p * self.flat_subscription_ratio(p))
    }

    /// Lowest fee that keeps the peak load within capacity.
    pub fn flat_p_min(&self) -> f64 {
        let full = self.kappa_peak * self.n_hat * self.mean_demand();
        if full <= self.capacity {
            0.0
        } else {
            self.flat_price_cap() * (1.0 - self.capacity / full).powf(self.theta / (2.0 - self.sigma))
        }
    }

    /// Threshold price `p0 = max(p_min, p_z)` where `p_z` is the zero of the
    /// revenue on its rising branch. Returns `(p0, attainable)`.
    pub fn flat_threshold_price(&self) -> Result<(f64, bool)> {
        let p_min = self.flat_p_min();
        let p_z = self.flat_zero_revenue_price()?;
        if p_min > p_z {
            Ok((p_min, true))
        } else {
            Ok((p_z, false))
        }
    }

    fn flat_zero_revenue_price(&self) -> Result<f64> {
        if self.eta == 0.0 {
            return Ok(0.0);
        }
        let hi = self.flat_revenue_argmax_unconstrained()?;
        let r = |p: f64| self.flat_revenue(p).unwrap_or(f64::NAN);
        bisect(r, 0.0, hi, ROOT_TOL).ok_or_else(|| config("flat revenue never turns positive"))
    }

    /// Stationary point of the flat revenue on the whole price range.
    fn flat_revenue_argmax_unconstrained(&self) -> Result<f64> {
        let cap = self.flat_price_cap();
        let hi = self.flat_inflection().min(cap);
        let lo = cap * 1e-300f64.max(f64::MIN_POSITIVE);
        bisect(|p| self.flat_r1(p), lo, hi, ROOT_TOL)
            .ok_or_else(|| config("flat marginal revenue has no sign change"))
    }

    pub fn flat_point(&self, p: f64) -> Result<AnalyticPoint> {
        let revenue = self.flat_revenue(p)?;
        let surplus = self.flat_surplus(p);
        let ratio = self.flat_subscription_ratio(p);
        let traffic = self.flat_traffic(p);
        Ok(AnalyticPoint {
            price: p,
            revenue,
            surplus,
            welfare: revenue + surplus,
            subscription_ratio: ratio,
            traffic,
            peak_load: self.flat_peak_load(p),
            payment_per_unit_traffic: if traffic > 0.0 {
                p * ratio * self.n_hat / traffic
            } else {
                0.0
            },
        })
    }

    /// Revenue-maximizing flat fee.
    pub fn solve_flat(&self) -> Result<AnalyticEquilibrium> {
        self.validate()?;
        if !self.eta_condition() {
            return Ok(AnalyticEquilibrium {
                family: SchemeFamily::Flat,
                saturation: Saturation::Infeasible,
                threshold_price: self.flat_price_cap(),
                p_min: self.flat_p_min(),
                threshold_attainable: false,
                optimum: None,
            });
        }
        let (p0, attainable) = self.flat_threshold_price()?;
        let p_min = self.flat_p_min();
        let cap = self.flat_price_cap();
        let slope = if p0 > 0.0 { self.flat_r1(p0) } else { f64::INFINITY };
        let (price, saturation) = if attainable && slope <= 0.0 {
            (p0, Saturation::OptSaturated)
        } else {
            let hi = self.flat_inflection().min(cap);
            let lo = if p0 > 0.0 { p0 } else { cap * f64::MIN_POSITIVE };
            let root = bisect(|p| self.flat_r1(p), lo, hi, ROOT_TOL)
                .ok_or_else(|| config("flat marginal revenue has no root above the threshold"))?;
            (root, Saturation::OptUnsaturated)
        };
        Ok(AnalyticEquilibrium {
            family: SchemeFamily::Flat,
            saturation,
            threshold_price: p0,
            p_min,
            threshold_attainable: attainable,
            optimum: Some(self.flat_point(price)?),
        })
    }

    fn check_volume_domain(&self, p: f64) -> Result<()> {
        if p > 0.0 && p.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain {
                what: "unit price",
                value: p,
                domain: "(0, inf)",
            })
        }
    }

    /// Per-user traffic ceiling `(theta / (p kappa_avg))^(1 / (1 - theta))`.
    pub fn volume_psi(&self, p: f64) -> Result<f64> {
        self.check_volume_domain(p)?;
        Ok(self.psi(p))
    }

    fn psi(&self, p: f64) -> f64 {
        (self.theta / (p * self.kappa_avg)).powf(1.0 / (1.0 - self.theta))
    }

    /// Unit price below which every user consumes the full demand.
    pub fn volume_full_demand_price(&self) -> f64 {
        self.theta / (self.kappa_avg * self.phi_max.powf(1.0 - self.theta))
    }

    fn traffic_at_psi(&self, psi: f64) -> f64 {
        if psi >= self.phi_max {
            self.n_hat * self.mean_demand()
        } else {
            let q = (psi / self.phi_max).powf(1.0 - self.sigma);
            self.n_hat * psi * (1.0 - q / (2.0 - self.sigma))
        }
    }

    /// Total generated traffic at unit price `p`.
    pub fn volume_traffic(&self, p: f64) -> Result<f64> {
        self.check_volume_domain(p)?;
        Ok(self.traffic_at_psi(self.psi(p)))
    }

    /// Expected 3G volume `B(p)`.
    pub fn volume_b(&self, p: f64) -> Result<f64> {
        Ok(self.kappa_avg * self.volume_traffic(p)?)
    }

    pub fn volume_revenue(&self, p: f64) -> Result<f64> {
        Ok((p - self.eta) * self.volume_b(p)?)
    }

    /// `B'(p)`.
    pub fn volume_b_prime(&self, p: f64) -> Result<f64> {
        self.check_volume_domain(p)?;
        let psi = self.psi(p);
        if psi >= self.phi_max {
            return Ok(0.0);
        }
        let q = (psi / self.phi_max).powf(1.0 - self.sigma);
        Ok(-self.kappa_avg * self.n_hat * psi / (p * (1.0 - self.theta)) * (1.0 - q))
    }

    /// `R'(p) / B(p) = 1 + (p - eta) B'(p) / B(p)`.
    pub fn volume_marginal_ratio(&self, p: f64) -> Result<f64> {
        Ok(1.0 + (p - self.eta) * self.volume_b_prime(p)? / self.volume_b(p)?)
    }

    pub fn volume_peak_load(&self, p: f64) -> Result<f64> {
        Ok(self.kappa_peak * self.volume_traffic(p)?)
    }

    pub fn volume_surplus(&self, p: f64) -> Result<f64> {
        self.check_volume_domain(p)?;
        let psi = self.psi(p);
        let a = psi.min(self.phi_max);
        let (s, th, z) = (self.sigma, self.theta, self.normalizer());
        let tail = 1.0 - (a / self.phi_max).powf(1.0 - s);
        Ok(self.n_hat
            * (a.powf(1.0 + th - s) / (z * (1.0 + th - s))
                - p * self.kappa_avg * a.powf(2.0 - s) / (z * (2.0 - s))
                + (1.0 - th) * psi.powf(th) * tail))
    }

    /// Lowest unit price that keeps the peak load within capacity.
    pub fn volume_p_min(&self) -> f64 {
        let full = self.kappa_peak * self.n_hat * self.mean_demand();
        if full <= self.capacity {
            return 0.0;
        }
        let lo = self.volume_full_demand_price();
        let excess = |p: f64| self.kappa_peak * self.traffic_at_psi(self.psi(p)) - self.capacity;
        let mut hi = lo * 2.0;
        while excess(hi) > 0.0 {
            hi *= 2.0;
        }
        bisect(excess, lo, hi, ROOT_TOL).unwrap_or(hi)
    }

    /// `(p0, attainable)` with `p0 = max(p_min, eta)`.
    pub fn volume_threshold_price(&self) -> (f64, bool) {
        let p_min = self.volume_p_min();
        if p_min > self.eta {
            (p_min, true)
        } else {
            (self.eta, false)
        }
    }

    pub fn volume_point(&self, p: f64) -> Result<AnalyticPoint> {
        let traffic = self.volume_traffic(p)?;
        let revenue = self.volume_revenue(p)?;
        let surplus = self.volume_surplus(p)?;
        Ok(AnalyticPoint {
            price: p,
            revenue,
            surplus,
            welfare: revenue + surplus,
            subscription_ratio: 1.0,
            traffic,
            peak_load: self.kappa_peak * traffic,
            payment_per_unit_traffic: p * self.kappa_avg,
        })
    }

    /// Revenue-maximizing unit price.
    pub fn solve_volume(&self) -> Result<AnalyticEquilibrium> {
        self.validate()?;
        let (p0, attainable) = self.volume_threshold_price();
        let p_min = self.volume_p_min();
        let ratio = |p: f64| self.volume_marginal_ratio(p).unwrap_or(f64::NAN);
        let at_threshold = if p0 > 0.0 { ratio(p0) } else { 1.0 };
        let (price, saturation) = if attainable && at_threshold <= 0.0 {
            (p0, Saturation::OptSaturated)
        } else {
            let lo = if p0 > 0.0 { p0 } else { self.volume_full_demand_price() };
            let mut hi = lo.max(self.volume_full_demand_price()) * 2.0;
            while ratio(hi) > 0.0 {
                hi *= 2.0;
                if !hi.is_finite() {
                    return Err(config("volume marginal revenue never turns negative"));
                }
            }
            let root = bisect(ratio, lo, hi, ROOT_TOL)
                .ok_or_else(|| config("volume marginal revenue has no root"))?;
            (root, Saturation::OptUnsaturated)
        };
        Ok(AnalyticEquilibrium {
            family: SchemeFamily::Volume,
            saturation,
            threshold_price: p0,
            p_min,
            threshold_attainable: attainable,
            optimum: Some(self.volume_point(price)?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> AnalyticParams {
        AnalyticParams {
            n_hat: 1000.0,
            sigma: 0.5,
            phi_max: 1.0,
            theta: 0.5,
            eta: 0.1,
            capacity: 2.0,
            kappa_avg: 0.5,
            kappa_peak: 0.01,
        }
    }

    #[test]
    fn flat_p_min_example() {
        let p = params();
        assert!((p.mean_demand() - 1.0 / 3.0).abs() < 1e-15);
        assert!((p.flat_p_min() - 0.4f64.cbrt()).abs() < 1e-12);
    }

    #[test]
    fn flat_revenue_vanishes_at_cap() {
        let p = params();
        assert_eq!(p.flat_revenue(1.0).unwrap(), 0.0);
        assert!(p.flat_revenue(1.5).is_err());
    }

    #[test]
    fn psi_unit_example() {
        let p = params();
        assert!((p.volume_psi(1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(p.volume_psi(0.0).is_err());
        assert_eq!(p.volume_revenue(p.eta).unwrap(), 0.0);
    }

    #[test]
    fn flat_solution_is_saturated_when_capacity_is_tight() {
        let eq = params().solve_flat().unwrap();
        assert_eq!(eq.saturation, Saturation::OptSaturated);
        let opt = eq.optimum.unwrap();
        assert!((opt.peak_load - 2.0).abs() < 1e-9);
    }
}
