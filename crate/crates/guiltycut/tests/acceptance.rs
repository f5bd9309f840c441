//! Acceptance gate: one criterion per test, one pass/fail line each.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use guiltycut::suites::{run_suite, SuiteReport};

const ACCEPTANCE_SEED: u64 = 20240811;

fn gate(criterion: &str, suite: &str) {
    let report: SuiteReport = run_suite(suite, ACCEPTANCE_SEED).expect("suite registered");
    let verdict = if report.passed { "PASS" } else { "FAIL" };
    println!(
        "[{verdict}] {criterion} ({} checks via suite `{suite}`)",
        report.cases
    );
    assert!(
        report.passed,
        "criterion `{criterion}` failed:\n  {}",
        report.failures.join("\n  ")
    );
}

#[test]
fn criterion_01_per_call_progress_guarantee() {
    gate(
        "criterion 1: per-call progress min{10 L3 R^4, eps^2/(168 R^2 L3)} over 100 seeded calls",
        "eq6_progress",
    );
}

#[test]
fn criterion_02_guarded_iteration_budget() {
    gate(
        "criterion 2: guarded loop terminates within 20 Delta L3^(1/3) eps^(-4/3) + 1 iterations",
        "theorem1_budget",
    );
}

#[test]
fn criterion_03_accuracy_scaling_split() {
    gate(
        "criterion 3: guarded slope <= 1.4 vs gradient-descent slope >= 1.7 (log-log, R^2 >= 0.9)",
        "scaling",
    );
}

#[test]
fn criterion_04_volume_reduction() {
    gate(
        "criterion 4: region volume <= vol(ball(r))/2 after ceil((d/tau) log(R/r)) cuts",
        "lemma1_volume",
    );
}

#[test]
fn criterion_05_certificate_trichotomy_and_draw_law() {
    gate(
        "criterion 5: certificate trichotomy, monotonicity, strictness, and geometric draw law",
        "lemma2_certificate",
    );
}

#[test]
fn criterion_06_four_point_decrease() {
    gate(
        "criterion 6: four-point probe descends 536 L3 R^4 under the curvature witness (1000 quartics)",
        "lemma3_fourpoint",
    );
}

#[test]
fn criterion_07_mean_draw_tail() {
    gate(
        "criterion 7: P(Kbar >= y) <= e^((1-y)/10) + 3 sigma at y in {5, 11, 21}",
        "chernoff",
    );
}

#[test]
fn criterion_08_model_deviation_bounds() {
    gate(
        "criterion 8: quartic model within (L3/3)d^3 / L3 d^2 of f and an upper bound on f",
        "model_bounds",
    );
}

#[test]
fn criterion_09_quartic_loop_certifies_f() {
    gate(
        "criterion 9: quartic loop certifies f, transfers model decrease, one n3 per iteration",
        "theorem2_quartic",
    );
}

#[test]
fn criterion_10_cutting_failure_reproduction() {
    gate(
        "criterion 10: scripted cuts exclude all nine stationary points; certificate finds a pair",
        "figure1_trace",
    );
}

#[test]
fn criterion_11_oracle_hygiene() {
    gate(
        "criterion 11: finite-difference suite at 1e-5 over the corpus; first-order run keeps n2 = 0",
        "oracle_hygiene",
    );
}

/// Extra gate beyond the numbered criteria: every trust-region branch is
/// forced once and checked against its own decrease bound.
#[test]
fn branch_coverage_per_case_bounds() {
    gate(
        "branch coverage: per-branch decrease bounds (escape 10.5 L3 R^4, probes 536 L3 R^4)",
        "branch_coverage",
    );
}
