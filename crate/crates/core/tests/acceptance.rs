//! Acceptance run: one PASS/FAIL line per criterion. Exits non-zero when a
//! criterion fails on anything other than a documented deviation.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use offload_core::equilibrium::SolverOptions;
use offload_core::experiments::{summary_text, Calibration, FigureSuite, SuiteOptions};
use offload_core::validate::{self, SuiteResult};

const SEED: u64 = 2024;

fn report(n: usize, r: &SuiteResult) {
    println!("[{n}] {}", r.line());
}

fn main() -> ExitCode {
    let opts = SolverOptions::default();
    let desk = Calibration::desk();
    let mut results: Vec<(usize, SuiteResult)> = Vec::new();
    let mut run = |n: usize, r: offload_core::Result<SuiteResult>| {
        let r = r.expect("suite error");
        report(n, &r);
        results.push((n, r));
    };
    run(1, validate::analytic_exactness(SEED));
    run(2, validate::derivative_checks(SEED));
    run(3, validate::unimodality(SEED));
    run(4, validate::comparative_statics(SEED));
    run(5, validate::simulation_agreement(SEED, &opts));
    run(6, validate::best_response_oracles(SEED));

    let start = Instant::now();
    let suite = FigureSuite::run(&desk, &Calibration::congested(), &SuiteOptions::default()).expect("figure suite");
    let elapsed = start.elapsed();
    let checks = suite.checks();
    for c in &checks {
        println!("    {}", c.line());
    }
    run(7, Ok(validate::figure_orderings(&suite, elapsed)));
    run(8, validate::structural_identities(&desk, SEED, &opts));
    run(8, Ok(validate::figure_identities(&suite)));

    let out = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    match suite.write_csv(&out) {
        Ok(_) => {
            let _ = std::fs::write(out.join("summary.txt"), summary_text(&checks));
            println!("figure data written to {}", out.display());
        }
        Err(e) => println!("could not write figure data: {e}"),
    }

    let blocking: Vec<_> = results.iter().filter(|(_, r)| !r.passed && !r.documented).collect();
    let documented = results.iter().filter(|(_, r)| !r.passed && r.documented).count();
    println!(
        "acceptance: {} passed, {documented} documented deviations, {} failed",
        results.iter().filter(|(_, r)| r.passed).count(),
        blocking.len()
    );
    if blocking.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
