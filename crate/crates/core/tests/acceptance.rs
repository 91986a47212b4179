//! Runs the eleven acceptance criteria and prints one line per criterion.
//! Seed from SIGEO_SEED (default 0).

use std::process::ExitCode;

use sigeo_core::verify::{run_criterion, CRITERIA};

fn main() -> ExitCode {
    let seed = std::env::var("SIGEO_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(0);
    let mut failed = 0;
    for (id, ..) in CRITERIA {
        let r = run_criterion(id, seed).expect("criterion id");
        println!(
            "criterion {:>2} {:<30} {} ({:.1}s) {}",
            r.id,
            r.name,
            if r.passed { "PASS" } else { "FAIL" },
            r.seconds,
            r.detail
        );
        failed += usize::from(!r.passed);
    }
    println!(
        "acceptance: {}/{} criteria passed",
        CRITERIA.len() - failed,
        CRITERIA.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
