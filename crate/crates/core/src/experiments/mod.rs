//! Calibrated experiment suite: paired sweeps over delay scenarios, demand,
//! capacity, tariffs, delay mixes and disutility.

pub mod calibration;
pub mod report;
pub mod sweep;

pub use calibration::{
    homogeneous_population, Calibration, DelayAssignment, MobilitySource, Population,
    WillingnessMode,
};
pub use report::{summary_text, Check, CheckKind, FigureSuite, SuiteOptions};
pub use sweep::{
    run_capacity_comparison, run_disutility_sweep, run_granularity_comparison, run_mix_sweep,
    run_price_dynamics, run_scenario_sweep, AxisValue, Baseline, CapacityComparison,
    ComparisonReport, ComparisonRow, PointResult, SweepAxis, SweepSpec,
};
