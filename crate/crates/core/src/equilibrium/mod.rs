//! The provider's pricing problem: closed forms for the flat and volume
//! tariffs on a homogeneous cell, and numerical search over heterogeneous
//! populations for all four tariffs.

pub mod analytic;
pub mod numeric;

use serde::Serialize;

use crate::market::MarketOutcome;
use crate::pricing::{PricingScheme, SchemeFamily};

pub use analytic::{AnalyticEquilibrium, AnalyticParams, AnalyticPoint};
pub use numeric::{solve_numeric, SolverOptions};

/// Relative distance to capacity within which the optimum counts as saturated.
pub const SATURATION_TOLERANCE: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Saturation {
    OptSaturated,
    OptUnsaturated,
    Infeasible,
}

impl Saturation {
    pub fn name(self) -> &'static str {
        match self {
            Saturation::OptSaturated => "opt_saturated",
            Saturation::OptUnsaturated => "opt_unsaturated",
            Saturation::Infeasible => "infeasible",
        }
    }
}

impl std::fmt::Display for Saturation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One evaluated tariff during the search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TracePoint {
    /// Tariff parameters: `[fee]`, `[unit_price]`, `[fee1, fee2, cap1]` or `[base, beta]`.
    pub params: Vec<f64>,
    pub revenue: f64,
    /// `None` when the point was ranked but its feasibility never checked.
    pub feasible: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SolverTrace {
    pub points: Vec<TracePoint>,
    pub evaluations: usize,
    /// The coarse grid showed more than one local revenue maximum.
    pub multimodal: bool,
    pub notes: Vec<String>,
}

impl SolverTrace {
    pub fn record(&mut self, params: Vec<f64>, revenue: f64, feasible: Option<bool>) {
        self.points.push(TracePoint {
            params,
            revenue,
            feasible,
        });
    }
}

/// Provider optimum found by a solver.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumResult {
    pub family: SchemeFamily,
    pub scheme_at_optimum: Option<PricingScheme>,
    pub outcome: Option<MarketOutcome>,
    pub saturation: Saturation,
    /// Infimum of the feasible prices along the searched one-dimensional
    /// family, when one was located.
    pub threshold_price: Option<f64>,
    pub trace: SolverTrace,
}

impl EquilibriumResult {
    pub fn infeasible(family: SchemeFamily, trace: SolverTrace) -> Self {
        Self {
            family,
            scheme_at_optimum: None,
            outcome: None,
            saturation: Saturation::Infeasible,
            threshold_price: None,
            trace,
        }
    }

    pub fn revenue(&self) -> f64 {
        self.outcome.as_ref().map_or(0.0, |o| o.revenue)
    }

    pub fn is_feasible(&self) -> bool {
        self.outcome.is_some()
    }
}

/// Saturated iff the peak cell load at the optimum is within
/// [`SATURATION_TOLERANCE`] of capacity.
pub fn classify_saturation(outcome: Option<&MarketOutcome>) -> Saturation {
    match outcome {
        None => Saturation::Infeasible,
        Some(o) if !o.feasible => Saturation::Infeasible,
        Some(o) => {
            let c = o.capacity_per_cell;
            if c.is_finite() && o.peak_cell_load >= (1.0 - SATURATION_TOLERANCE) * c {
                Saturation::OptSaturated
            } else {
                Saturation::OptUnsaturated
            }
        }
    }
}
