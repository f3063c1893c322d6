//! Full-scale acceptance checks, one test per criterion.
//!
//! Each test writes its verdict line straight to stdout, so the lines show
//! up in `cargo test` output even when the harness captures `println!`.

use std::io::Write;

use kseq_core::precision::Precision;
use kseq_core::verify::{run_criterion, Scale};

fn check(id: u8) {
    let outcome = run_criterion(id, Scale::Full, Precision::default());
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{}", outcome.line());
    let _ = out.flush();
    assert!(outcome.pass, "{}", outcome.line());
}

#[test]
fn acceptance_01_oracle_equivalence() {
    check(1);
}

#[test]
fn acceptance_02_identity_suite() {
    check(2);
}

#[test]
fn acceptance_03_transfer_matrix_equals_dp() {
    check(3);
}

#[test]
fn acceptance_04_runup_oracle() {
    check(4);
}

#[test]
fn acceptance_05_gk_integral() {
    check(5);
}

#[test]
fn acceptance_06_fk_primary_root() {
    check(6);
}

#[test]
fn acceptance_07_spectral_invariants() {
    check(7);
}

#[test]
fn acceptance_08_eigen_product_residual() {
    check(8);
}

#[test]
fn acceptance_09_k2_main_term() {
    check(9);
}

#[test]
fn acceptance_10_three_factor_decomposition() {
    check(10);
}

#[test]
fn acceptance_11_monte_carlo() {
    check(11);
}

#[test]
fn acceptance_12_pk_main_term() {
    check(12);
}

#[test]
fn acceptance_13_conjecture_fit() {
    check(13);
}
