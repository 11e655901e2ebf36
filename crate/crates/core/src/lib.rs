//! Market-equilibrium engine for delayed WiFi offloading.
//!
//! A provider sets a tariff, users pick how much traffic to generate, and the
//! expected 3G share of that traffic depends on how long each user's traffic
//! can wait for a WiFi contact. The crate builds synthetic populations,
//! computes best responses and market aggregates, and searches for the
//! revenue-maximizing tariff both numerically and in closed form.

pub mod config;
pub mod equilibrium;
pub mod error;
pub mod experiments;
pub mod market;
pub mod mobility;
pub mod numeric;
pub mod pricing;
pub mod scenario;
pub mod user_response;
pub mod validate;

pub use error::{Error, Result};
pub use market::{MarketOutcome, MarketParams};
pub use mobility::{ContactMatrix, ContactModel, MobilityConfig};
pub use pricing::{PriceMatrix, PricingScheme, SchemeFamily};
pub use scenario::{
    ClassMix, Deadline, DelayProfile, DelayScenario, DemandDistribution, ModelConfig, UserProfile,
};
pub use user_response::UserResponse;
