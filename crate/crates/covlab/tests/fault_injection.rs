//! Proves the self-verification suite can actually catch a numerical
//! regression: a deliberate +1e-3 shift injected into digamma must flip
//! the unbiasedness check from pass to fail.
//!
//! The fault flag is process-global, so everything lives in one test
//! function in its own test binary; nothing else runs in this process.

use covlab::cli::verify::{run_suite, DEFAULT_VERIFY_SEED};
use covlab::specialfn::{digamma, set_digamma_fault};

#[test]
fn injected_digamma_fault_is_detected_by_the_unbiasedness_check() {
    // The hook itself: exactly a +1e-3 shift, and it resets.
    let baseline = digamma(5.0).unwrap();
    set_digamma_fault(true);
    let shifted = digamma(5.0).unwrap();
    set_digamma_fault(false);
    assert!(
        ((shifted - baseline) - 1e-3).abs() <= 1e-12,
        "hook shift was {}",
        shifted - baseline
    );
    assert_eq!(digamma(5.0).unwrap(), baseline, "hook must reset cleanly");

    let clean = run_suite("umvue_unbiased", DEFAULT_VERIFY_SEED).unwrap();
    assert!(
        clean.all_passed(),
        "clean build must pass:\n{}",
        clean.render_text()
    );

    set_digamma_fault(true);
    let faulted = run_suite("umvue_unbiased", DEFAULT_VERIFY_SEED).unwrap();
    set_digamma_fault(false);

    assert!(
        !faulted.all_passed(),
        "a 1e-3 digamma shift must not go unnoticed:\n{}",
        faulted.render_text()
    );
    let check = faulted
        .checks
        .iter()
        .find(|c| c.name == "umvue_logdet_unbiased")
        .expect("unbiasedness check present");
    assert!(!check.pass, "the failing check should be the bias one");

    // The flag resets cleanly: the suite passes again.
    let recovered = run_suite("umvue_unbiased", DEFAULT_VERIFY_SEED).unwrap();
    assert!(recovered.all_passed(), "fault flag must reset");
}
