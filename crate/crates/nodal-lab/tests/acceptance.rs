//! Acceptance gate: one test per criterion, each printing a single
//! pass/fail line (visible with `cargo test --test acceptance -- --nocapture`).
//!
//! The heavy eigensolves over the shared domain corpus run once per
//! process; tests that need the corpus block on its initialization and
//! then reuse it, so the whole gate stays well inside the time budget.

use nodal_lab::lab::acceptance::{self, CheckOutcome};

const SEED: u64 = 7;

fn gate(criterion: usize, outcome: CheckOutcome) {
    let status = if outcome.passed { "PASS" } else { "FAIL" };
    println!(
        "criterion {:2} ({}): {} [{:.1}s] - {}",
        criterion, outcome.name, status, outcome.seconds, outcome.detail
    );
    assert!(
        outcome.passed,
        "criterion {} ({}) failed: {}",
        criterion, outcome.name, outcome.detail
    );
}

#[test]
fn criterion_01_fem_accuracy() {
    gate(1, acceptance::check_fem_accuracy(SEED));
}

#[test]
fn criterion_02_courant_audit() {
    gate(2, acceptance::check_courant_audit(SEED));
}

#[test]
fn criterion_03_payne_classification() {
    gate(3, acceptance::check_payne_classification(SEED));
}

#[test]
fn criterion_04_payne_openness() {
    gate(4, acceptance::check_payne_openness(SEED));
}

#[test]
fn criterion_05_angle_quantization() {
    gate(5, acceptance::check_angle_quantization(SEED));
}

#[test]
fn criterion_06_hadamard_validation() {
    gate(6, acceptance::check_hadamard_validation(SEED));
}

#[test]
fn criterion_07_degenerate_calculus() {
    gate(7, acceptance::check_degenerate_calculus(SEED));
}

#[test]
fn criterion_08_gap_bound() {
    gate(8, acceptance::check_gap_bound(SEED));
}

#[test]
fn criterion_09_dumbbell_convergence() {
    gate(9, acceptance::check_dumbbell_convergence(SEED));
}

#[test]
fn criterion_10_genericity() {
    gate(10, acceptance::check_genericity(SEED));
}

#[test]
fn criterion_11_rotational_identity() {
    gate(11, acceptance::check_rotational_identity(SEED));
}

#[test]
fn criterion_12_inradius_bound() {
    gate(12, acceptance::check_inradius_bound(SEED));
}
