use kseq_core::precision::{Precision, PrecisionReal};
use kseq_core::spectral::{char_roots, domination_profile, reconstruction_error, runup_eigen_comparison, transition_matrix};
use kseq_core::transfer::{gk_eval, iterate_product, z_of, ProductMode, RunupWindow};
use proptest::prelude::*;

fn real(x: f64) -> PrecisionReal {
    PrecisionReal::from_f64(x, Precision::default())
}

/// The run-up against the eigenvalue product, with N in the middle of the
/// window, approaches its predicted constant as s shrinks.
#[test]
fn runup_eigen_residual_shrinks_in_window() {
    let grids: [(usize, &[f64]); 3] = [(2, &[1e-4, 1e-5, 1e-6]), (3, &[1e-6, 1e-7, 1e-8, 1e-9]), (4, &[1e-8, 1e-9])];
    for (k, grid) in grids {
        let mut last = f64::INFINITY;
        for &s in grid {
            let w = RunupWindow::new(k, s, 1.0);
            let n = (w.lower * w.upper).sqrt().ceil() as u64;
            assert!(w.contains(n), "k={k} s={s} window ({}, {})", w.lower, w.upper);
            let r = runup_eigen_comparison(k, &real(s), n).unwrap().residual.abs();
            assert!(r < last, "k={k} s={s}: {r} after {last}");
            last = r;
        }
    }
}

#[test]
fn domination_ratio_is_bounded() {
    for k in 2..=4 {
        for s in [0.05, 0.02, 0.01, 0.005] {
            for d in domination_profile(k, &real(s), &[2, 4, 8, 16, 32, 64]).unwrap() {
                assert!(d.normalized <= 2.0, "k={k} s={s} n={}: {}", d.n, d.normalized);
            }
        }
    }
}

#[test]
fn gk_eval_agrees_with_formal_series() {
    for k in 2..=4 {
        let state = iterate_product(k, 401, &ProductMode::Formal { n_max: 400 }).unwrap();
        let series = &state.formal().unwrap()[0];
        for s in [0.5, 0.3] {
            let sr = real(s);
            let e = series.eval_at(&sr, 1e-30).unwrap();
            assert!(e.within_tolerance);
            let g = gk_eval(k, &sr, 1e-30).unwrap();
            let gap = (g.log_value.clone() - e.value.ln()).abs().to_f64();
            assert!(gap < 1e-29 + g.total_bound(), "k={k} s={s}: {gap:e}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn spectral_point_invariants(k in 2usize..6, n in 1u64..2000, s in 0.001f64..0.5) {
        let p = Precision::default();
        let sr = real(s);
        let a = char_roots(k, &z_of(n, &sr)).unwrap();
        let b = char_roots(k, &z_of(n + 1, &sr)).unwrap();
        prop_assert!(a.max_root_residual() < p.tolerance(8));
        let (vs, vp) = a.vieta_errors();
        prop_assert!(vs < p.tolerance(10) && vp < p.tolerance(10));
        prop_assert!(reconstruction_error(&a, n, &sr).unwrap() < p.tolerance(10));
        let t = transition_matrix(&a, &b).unwrap();
        prop_assert!(t.t11() > 0u32);
    }
}
