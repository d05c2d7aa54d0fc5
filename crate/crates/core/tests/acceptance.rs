//! Acceptance gate: runs every numbered criterion and prints one pass/fail
//! line per criterion. The suite is deterministic (all sampling is seeded).

use symtop::verify::{run_suite, Suite};

#[test]
fn acceptance_criteria() {
    let results = run_suite(Suite::Full);
    assert_eq!(results.len(), 11);
    let mut failed = Vec::new();
    for r in &results {
        let status = if r.passed { "PASS" } else { "FAIL" };
        println!(
            "[{status}] criterion {:2}: {} — {} ({:.1}s)",
            r.id, r.name, r.detail, r.seconds
        );
        if !r.passed {
            failed.push(r.id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
