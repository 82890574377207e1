mod common;

use chaosfilter::entropy::{activity_entropy, build_follow_stats, dfr_vector, dpr_vector, EntropyReport, Smoothing};
use chaosfilter::log_entropy;
use common::*;
use proptest::prelude::*;

fn check_against_oracle(v: &Variants, alpha: f64) {
    let log = to_log(v);
    let stats = build_follow_stats(&log);
    for a in activities(v) {
        for (forward, vector) in [(true, dfr_vector(&stats, &a, alpha)), (false, dpr_vector(&stats, &a, alpha))] {
            let vector = vector.unwrap();
            let labels = if forward { stats.successor_labels() } else { stats.predecessor_labels() };
            let oracle = distribution(v, &a, alpha, forward);
            assert_eq!(labels.len(), oracle.len());
            for (label, p) in labels.iter().zip(&vector.entries) {
                assert!((oracle[*label] - p).abs() < 1e-12, "{a} -> {label}: {p} vs {}", oracle[*label]);
            }
            assert!((vector.sum() - 1.0).abs() < 1e-9);
        }
        let h = activity_entropy(&stats, &a, alpha).unwrap();
        assert!((h - common::activity_entropy(v, &a, alpha)).abs() < 1e-9);
    }
    assert!((log_entropy(&log, alpha) - common::log_entropy(v, alpha)).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn vectors_match_naive_counts(v in arb_variants(6, 7, 6)) {
        check_against_oracle(&v, 0.0);
        check_against_oracle(&v, 1.0 / activities(&v).len() as f64);
        check_against_oracle(&v, 0.25);
    }

    #[test]
    fn entropies_are_bounded(v in arb_variants(6, 7, 6)) {
        let log = to_log(&v);
        let report = EntropyReport::for_log(&log, Smoothing::None);
        let n = activities(&v).len() as f64;
        for row in &report.rows {
            prop_assert!(row.h_dfr >= -1e-12 && row.h_dfr <= (n + 1.0).log2() + 1e-9);
            prop_assert!(row.h_dpr >= -1e-12 && row.h_dpr <= (n + 1.0).log2() + 1e-9);
        }
    }

    #[test]
    fn smoothing_raises_entropy_of_sparse_rows(v in arb_variants(5, 5, 4)) {
        // with α > 0 every category gets mass, so no row is deterministic
        let log = to_log(&v);
        let report = EntropyReport::for_log(&log, Smoothing::Adaptive);
        for row in &report.rows {
            prop_assert!(row.h_dfr > 0.0 && row.h_dpr > 0.0);
        }
    }

    #[test]
    fn multiplicity_scaling_keeps_entropy(v in arb_variants(5, 6, 5), k in 2u64..5) {
        let scaled: Variants = v.iter().map(|(t, m)| (t.clone(), m * k)).collect();
        let a = log_entropy(&to_log(&v), 0.0);
        let b = log_entropy(&to_log(&scaled), 0.0);
        prop_assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn worked_example_values() {
    let v: Variants = vec![
        (vec!["a".into(), "b".into(), "c".into(), "x".into()], 10),
        (vec!["a".into(), "b".into(), "x".into(), "c".into()], 10),
        (vec!["a".into(), "x".into(), "b".into(), "c".into()], 10),
    ];
    let log = to_log(&v);
    let report = EntropyReport::for_log(&log, Smoothing::None);
    for (a, expected) in [("a", 0.918), ("b", 1.837), ("c", 1.837), ("x", 3.170)] {
        let got = report.get(a).unwrap().h_total;
        assert!((got - expected).abs() < 1e-3, "{a}: {got}");
        assert!((got - common::activity_entropy(&v, a, 0.0)).abs() < 1e-12);
    }
}
