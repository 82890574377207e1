mod common;

use chaosfilter::evaluation::{
    kendall_tau_b, ranks_from_order, replay_nondeterminism, winning_number, Averaging, RankMatrix, TraceReplay,
    Replayer,
};
use chaosfilter::synthesis::simulate;
use chaosfilter::ProcessTree;
use common::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn replay_matches_language_enumeration(tree in arb_loop_free_tree(), seed in any::<u64>()) {
        let lang = tree.language(64);
        prop_assume!(lang.iter().any(|w| !w.is_empty()));
        let log = simulate(&tree, 20, seed, 0.5).unwrap();
        let mut replayer = Replayer::new(&tree);
        for (trace, _) in variants(&log) {
            let expected = language_nondeterminism(&lang, &trace).unwrap();
            let got = replayer.replay(&trace).mean().unwrap();
            prop_assert!((got - expected).abs() < 1e-12, "{tree} on {trace:?}: {got} vs {expected}");
        }
    }

    #[test]
    fn traces_outside_the_language_are_rejected(tree in arb_loop_free_tree(), v in arb_variants(4, 4, 4)) {
        let lang = tree.language(64);
        let mut replayer = Replayer::new(&tree);
        for (trace, _) in &v {
            let accepted = !matches!(replayer.replay(trace), TraceReplay::Rejected);
            prop_assert_eq!(accepted, lang.contains(trace), "{} on {:?}", tree, trace);
        }
    }

    #[test]
    fn tau_is_antisymmetric_under_reversal(perm in Just((0..9).map(f64::from).collect::<Vec<_>>()).prop_shuffle()) {
        let id: Vec<f64> = (0..9).map(f64::from).collect();
        let reversed: Vec<f64> = perm.iter().map(|x| 8.0 - x).collect();
        let a = kendall_tau_b(&id, &perm).unwrap().tau_b;
        let b = kendall_tau_b(&id, &reversed).unwrap().tau_b;
        prop_assert!((a + b).abs() < 1e-12);
    }
}

#[test]
fn loop_acceptance_matches_bounded_language() {
    let tree: ProcessTree = "seq(a, loop(xor(b, tau), c), par(d, loop(e, tau)))".parse().unwrap();
    let lang = tree.language(7);
    let mut replayer = Replayer::new(&tree);
    let alphabet = ["a", "b", "c", "d", "e"];
    // every word over the alphabet up to length 5
    let mut words: Vec<Vec<String>> = vec![Vec::new()];
    for _ in 0..5 {
        let mut next = Vec::new();
        for w in &words {
            for a in alphabet {
                let mut x = w.clone();
                x.push(a.to_string());
                next.push(x);
            }
        }
        for w in &next {
            let accepted = !matches!(replayer.replay(w), TraceReplay::Rejected);
            assert_eq!(accepted, lang.contains(w), "{w:?}");
        }
        words = next;
    }
}

#[test]
fn flower_and_choice_examples() {
    let log = to_log(&vec![(vec!["a".into()], 1)]);
    let xor: ProcessTree = "xor(a, b)".parse().unwrap();
    assert_eq!(replay_nondeterminism(&xor, &log, Averaging::PerTrace).nondeterminism, Some(2.0));
    let log = to_log(&vec![(vec!["c".into(), "a".into(), "b".into(), "a".into()], 3)]);
    let flower = ProcessTree::flower(["a", "b", "c"]);
    let out = replay_nondeterminism(&flower, &log, Averaging::PerTrace);
    assert_eq!((out.nondeterminism, out.fitness_fraction), (Some(3.0), 1.0));
}

#[test]
fn winning_number_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        // values drawn from a small set so ties occur
        let values: Vec<Vec<f64>> = (0..4).map(|_| (0..5).map(|_| rng.gen_range(0..4) as f64 / 2.0).collect()).collect();
        let matrix = RankMatrix::from_rows(
            (0..4).map(|i| format!("m{i}")).collect(),
            (0..5).map(|j| format!("l{j}")).collect(),
            values.iter().map(|r| r.iter().map(|&v| Some(v)).collect()).collect(),
        )
        .unwrap();
        let w = winning_number(&matrix).unwrap();
        assert_eq!(w.totals, brute_force_wins(&values));
        for (t, a) in w.totals.iter().zip(&w.averages) {
            assert_eq!(*t as f64 / 5.0, *a);
        }
    }
}

#[test]
fn tau_test_power_and_size() {
    let items: Vec<String> = (0..10).map(|i| format!("i{i}")).collect();
    let (r1, r2) = ranks_from_order(&items, &items).unwrap();
    let t = kendall_tau_b(&r1, &r2).unwrap();
    assert_eq!(t.tau_b, 1.0);
    assert!(t.reject_at_05);

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut kept = 0;
    for _ in 0..100 {
        let mut a = items.clone();
        let mut b = items.clone();
        a.shuffle(&mut rng);
        b.shuffle(&mut rng);
        let (r1, r2) = ranks_from_order(&a, &b).unwrap();
        if !kendall_tau_b(&r1, &r2).unwrap().reject_at_05 {
            kept += 1;
        }
    }
    assert!(kept >= 90, "{kept}");
}
