//! The four tariff families and the payment function `m(p, y)`.

use serde::{Deserialize, Serialize};

use crate::error::{config, contract, Result};
use crate::numeric::CompensatedSum;

/// Unit prices indexed by `[slot][cell]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceMatrix {
    values: Vec<Vec<f64>>,
}

impl PriceMatrix {
    pub fn new(values: Vec<Vec<f64>>) -> Result<Self> {
        let cells = values.first().map_or(0, Vec::len);
        if values.is_empty() || cells == 0 || values.iter().any(|r| r.len() != cells) {
            return Err(config("price matrix must be a non-empty rectangle"));
        }
        if values.iter().flatten().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(config("prices must be finite and nonnegative"));
        }
        Ok(Self { values })
    }

    pub fn constant(num_slots: usize, num_cells: usize, price: f64) -> Result<Self> {
        Self::new(vec![vec![price; num_cells]; num_slots])
    }

    pub fn num_slots(&self) -> usize {
        self.values.len()
    }

    pub fn num_cells(&self) -> usize {
        self.values[0].len()
    }

    #[inline]
    pub fn get(&self, t: usize, s: usize) -> f64 {
        self.values[t][s]
    }

    pub fn set(&mut self, t: usize, s: usize, price: f64) {
        self.values[t][s] = price.max(0.0);
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// `Some(p)` if every entry equals `p`.
    pub fn as_constant(&self) -> Option<f64> {
        let p = self.values[0][0];
        self.values.iter().flatten().all(|&v| v == p).then_some(p)
    }
}

/// A tariff offered by the provider.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PricingScheme {
    Flat { fee: f64 },
    TwoTier { fee1: f64, fee2: f64, cap1: f64 },
    Volume { unit_price: f64 },
    Congestion { unit_price: PriceMatrix },
}

/// Tariff family without parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeFamily {
    Flat,
    TwoTier,
    Volume,
    Congestion,
}

impl SchemeFamily {
    pub const ALL: [SchemeFamily; 4] = [
        SchemeFamily::Flat,
        SchemeFamily::TwoTier,
        SchemeFamily::Volume,
        SchemeFamily::Congestion,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeFamily::Flat => "flat",
            SchemeFamily::TwoTier => "two_tier",
            SchemeFamily::Volume => "volume",
            SchemeFamily::Congestion => "congestion",
        }
    }
}

impl std::fmt::Display for SchemeFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SchemeFamily {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "flat" => Ok(SchemeFamily::Flat),
            "two_tier" | "tiered" => Ok(SchemeFamily::TwoTier),
            "volume" => Ok(SchemeFamily::Volume),
            "congestion" => Ok(SchemeFamily::Congestion),
            other => Err(config(format!("unknown pricing scheme '{other}'"))),
        }
    }
}

impl PricingScheme {
    pub fn family(&self) -> SchemeFamily {
        match self {
            PricingScheme::Flat { .. } => SchemeFamily::Flat,
            PricingScheme::TwoTier { .. } => SchemeFamily::TwoTier,
            PricingScheme::Volume { .. } => SchemeFamily::Volume,
            PricingScheme::Congestion { .. } => SchemeFamily::Congestion,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = |v: f64, what: &str| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(config(format!("{what} must be finite and nonnegative, got {v}")))
            }
        };
        match self {
            PricingScheme::Flat { fee } => nonneg(*fee, "fee"),
            PricingScheme::Volume { unit_price } => nonneg(*unit_price, "unit_price"),
            PricingScheme::TwoTier { fee1, fee2, cap1 } => {
                nonneg(*fee1, "fee1")?;
                nonneg(*fee2, "fee2")?;
                if fee1 > fee2 {
                    return Err(config("two-tier fee1 must not exceed fee2"));
                }
                if !(*cap1 > 0.0) {
                    return Err(config("two-tier cap1 must be positive"));
                }
                Ok(())
            }
            PricingScheme::Congestion { unit_price } => PriceMatrix::new(unit_price.values.clone()).map(|_| ()),
        }
    }

    /// What a user with 3G traffic `y` (per transmission slot) along
    /// `cell_path` pays. Flat pricing charges the fee unconditionally; callers
    /// apply it to subscribers only.
    pub fn payment(&self, y: &[f64], cell_path: &[usize]) -> Result<f64> {
        if y.iter().any(|v| *v < 0.0 || v.is_nan()) {
            return Err(contract("negative traffic passed to payment"));
        }
        let total = || y.iter().copied().collect::<CompensatedSum>().value();
        Ok(match self {
            PricingScheme::Flat { fee } => *fee,
            PricingScheme::TwoTier { fee1, fee2, cap1 } => {
                let v = total();
                if v <= 0.0 {
                    0.0
                } else if v <= *cap1 {
                    *fee1
                } else {
                    *fee2
                }
            }
            PricingScheme::Volume { unit_price } => unit_price * total(),
            PricingScheme::Congestion { unit_price } => {
                if cell_path.len() < y.len() {
                    return Err(contract("cell path shorter than traffic vector"));
                }
                y.iter()
                    .enumerate()
                    .map(|(t, v)| unit_price.get(t, cell_path[t]) * v)
                    .collect::<CompensatedSum>()
                    .value()
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn payment_examples() {
        let tt = PricingScheme::TwoTier {
            fee1: 20.0,
            fee2: 50.0,
            cap1: 3.0,
        };
        assert_eq!(tt.payment(&[0.0, 0.0], &[0, 0]).unwrap(), 0.0);
        assert_eq!(tt.payment(&[1.0, 2.0], &[0, 0]).unwrap(), 20.0);
        assert_eq!(tt.payment(&[1.0, 2.5], &[0, 0]).unwrap(), 50.0);
        let v = PricingScheme::Volume { unit_price: 2.0 };
        assert_eq!(v.payment(&[1.0, 3.0], &[0, 0]).unwrap(), 8.0);
    }

    #[test]
    fn negative_traffic_is_rejected() {
        let v = PricingScheme::Volume { unit_price: 1.0 };
        assert!(matches!(
            v.payment(&[-1.0], &[0]),
            Err(crate::Error::Contract(_))
        ));
    }

    #[test]
    fn congestion_uses_path() {
        let m = PriceMatrix::new(vec![vec![1.0, 5.0], vec![2.0, 7.0]]).unwrap();
        let c = PricingScheme::Congestion { unit_price: m };
        assert_eq!(c.payment(&[1.0, 1.0], &[1, 0]).unwrap(), 7.0);
    }

    #[test]
    fn dominated_tiers_rejected() {
        let tt = PricingScheme::TwoTier {
            fee1: 5.0,
            fee2: 4.0,
            cap1: 1.0,
        };
        assert!(tt.validate().is_err());
    }
}
