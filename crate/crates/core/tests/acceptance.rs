//! One PASS/FAIL line per reproduction criterion.
//!
//! Run with `cargo test --release --test acceptance -- --nocapture` to see
//! the lines and realistic timings.

use trimap::suite::{run_suite, SuiteOptions, CRITERIA};

/// Criteria whose stated expectation contradicts the computed behavior.
/// Criterion 5 asks for `ln|x_n|` to fall, but the factor `1 - 1/ln|u|`
/// is above 1 for `|u| < 1`, so `|x_n|` grows without bound instead.
const EXPECTED_FAILURES: &[u32] = &[5];

#[test]
fn acceptance_criteria() {
    let seed = std::env::var("FD_SEED").ok().and_then(|s| s.parse().ok());
    let opts = SuiteOptions { seed: seed.unwrap_or(SuiteOptions::default().seed), ..Default::default() };
    let results = run_suite(&opts);
    assert_eq!(results.len(), CRITERIA.len());
    for r in &results {
        println!("{r}");
    }
    let unexpected: Vec<String> = results
        .iter()
        .filter(|r| r.passed == EXPECTED_FAILURES.contains(&r.id))
        .map(|r| r.to_string())
        .collect();
    assert!(unexpected.is_empty(), "unexpected outcomes:\n{}", unexpected.join("\n"));
}
