use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use offload_core::equilibrium::{solve_numeric, AnalyticParams, SolverOptions};
use offload_core::experiments::{Calibration, DelayAssignment, Population};
use offload_core::market::evaluate;
use offload_core::pricing::PricingScheme;
use offload_core::user_response::{respond_two_tier, respond_volume};
use offload_core::{DelayScenario, SchemeFamily};

fn desk_long() -> (Calibration, Population) {
    let mut cal = Calibration::desk();
    cal.delay = DelayAssignment::Scenario(DelayScenario::Long);
    let pop = Population::generate(&cal, 1).expect("population");
    (cal, pop)
}

fn responses(c: &mut Criterion) {
    let (cal, pop) = desk_long();
    let user = &pop.profiles[0];
    let theta = cal.model.theta;
    c.bench_function("respond_volume", |b| b.iter(|| respond_volume(black_box(user), 0.05, theta)));
    c.bench_function("respond_two_tier", |b| {
        b.iter(|| respond_two_tier(black_box(user), 1.0, 3.0, 10.0, theta))
    });
}

fn market(c: &mut Criterion) {
    let (cal, pop) = desk_long();
    let params = cal.market_params();
    c.bench_function("population_desk", |b| b.iter(|| Population::generate(black_box(&cal), 1)));
    c.bench_function("evaluate_flat_desk", |b| {
        b.iter(|| evaluate(&pop.profiles, &PricingScheme::Flat { fee: 2.0 }, &params))
    });
    c.bench_function("evaluate_volume_desk", |b| {
        b.iter(|| evaluate(&pop.profiles, &PricingScheme::Volume { unit_price: 0.05 }, &params))
    });
}

fn solvers(c: &mut Criterion) {
    let p = AnalyticParams {
        n_hat: 1000.0,
        sigma: 0.5,
        phi_max: 1.0,
        theta: 0.5,
        eta: 0.1,
        capacity: 2.0,
        kappa_avg: 0.5,
        kappa_peak: 0.01,
    };
    c.bench_function("analytic_flat", |b| b.iter(|| black_box(&p).solve_flat()));
    c.bench_function("analytic_volume", |b| b.iter(|| black_box(&p).solve_volume()));

    let (cal, pop) = desk_long();
    let params = cal.market_params();
    let opts = SolverOptions::default();
    let mut g = c.benchmark_group("numeric_desk");
    g.sample_size(10);
    for family in [SchemeFamily::Flat, SchemeFamily::Volume] {
        g.bench_function(family.name(), |b| b.iter(|| solve_numeric(&pop.profiles, &params, family, &opts)));
    }
    g.finish();
}

criterion_group!(benches, responses, market, solvers);
criterion_main!(benches);
