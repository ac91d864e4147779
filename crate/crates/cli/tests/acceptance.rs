//! One PASS/FAIL line per reproduction criterion. Runs without the libtest
//! harness so the lines are always printed; exits nonzero if any fails.

use std::process::ExitCode;

use vbpg_cli::checks::{criterion, run_check, validate_corpus, CheckContext, CRITERIA_COUNT};

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("temporary directory");
    let ctx = CheckContext::new(dir.path(), 0);
    let pre = validate_corpus(ctx.seed);
    println!("{} precondition: {} ({})", if pre.passed { "PASS" } else { "FAIL" }, pre.title, pre.detail);
    let mut failing = Vec::new();
    for i in 1..=CRITERIA_COUNT {
        let start = std::time::Instant::now();
        let outcome = run_check(i, &ctx);
        println!(
            "{} criterion {i}: {} ({}) [{:.1}s]",
            if outcome.passed { "PASS" } else { "FAIL" },
            criterion(i).1,
            outcome.detail,
            start.elapsed().as_secs_f64()
        );
        if !outcome.passed {
            failing.push(i);
        }
    }
    if pre.passed && failing.is_empty() {
        println!("acceptance: all {CRITERIA_COUNT} criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failing criteria {failing:?}, precondition passed: {}", pre.passed);
        ExitCode::FAILURE
    }
}
