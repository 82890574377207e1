mod common;

use std::collections::BTreeSet;

use chaosfilter::eventlog::xes::{self, XesOptions};
use chaosfilter::synthesis::{
    bundled, chaos_table_csv, evaluate_chaos, inject_chaos, simulate, ChaosInsertionSpec, ChaosMode,
};
use chaosfilter::FilterMethod;
use common::*;
use proptest::prelude::*;

fn mode() -> impl Strategy<Value = ChaosMode> {
    prop_oneof![Just(ChaosMode::Uniform), Just(ChaosMode::Frequent), Just(ChaosMode::Infrequent)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn projection_recovers_original(v in arb_variants(6, 6, 5), k in 1usize..5, m in mode(), seed in any::<u64>()) {
        let log = to_log(&v);
        let inj = inject_chaos(&log, &ChaosInsertionSpec::new(k, m, seed)).unwrap();
        prop_assert_eq!(inj.log.num_traces(), log.num_traces());
        prop_assert_eq!(inj.log.project_names(activities(&v)).unwrap(), log);
    }

    #[test]
    fn inserted_counts_follow_mode(v in arb_variants(6, 6, 5), k in 1usize..5, m in mode(), seed in any::<u64>()) {
        let log = to_log(&v);
        let counts: Vec<u64> = activities(&v).iter().map(|a| frequency(&v, a)).collect();
        let (min, max) = (*counts.iter().min().unwrap(), *counts.iter().max().unwrap());
        let inj = inject_chaos(&log, &ChaosInsertionSpec::new(k, m, seed)).unwrap();
        prop_assert_eq!(inj.inserted.len(), k);
        let after = variants(&inj.log);
        for (name, n) in &inj.inserted {
            prop_assert!(!activities(&v).contains(name));
            prop_assert_eq!(frequency(&after, name), *n);
            match m {
                ChaosMode::Frequent => prop_assert_eq!(*n, max),
                ChaosMode::Infrequent => prop_assert_eq!(*n, min),
                ChaosMode::Uniform => prop_assert!((min..=max).contains(n)),
            }
        }
    }
}

#[test]
fn shipped_fixture_matches_simulation() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/a12.xes");
    let import = xes::read(std::fs::File::open(path).unwrap(), XesOptions::default()).unwrap();
    let expected = simulate(&bundled::a12(), bundled::A12_TRACES, bundled::A12_SEED, 0.5).unwrap();
    assert_eq!(import.log, expected);
    assert_eq!(import.log.num_traces(), 25);
    assert_eq!(import.log.activities().len(), 12);

    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/a12.tree")).unwrap();
    assert_eq!(text.trim().parse::<chaosfilter::ProcessTree>().unwrap(), bundled::a12());
}

#[test]
fn grid_table_layout() {
    let log = simulate(&bundled::a12(), 25, 1, 0.5).unwrap();
    let methods = [FilterMethod::LeastFrequentFirst, FilterMethod::MostFrequentFirst];
    let cells = evaluate_chaos(&log, &[1, 2], &ChaosMode::ALL, &methods, 0).unwrap();
    assert_eq!(cells.len(), 2 * 3 * 2);
    let csv = chaos_table_csv(&cells);
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "method,1U,1F,1I,2U,2F,2I");
    assert_eq!(lines.count(), 2);
}

#[test]
fn simulation_is_reproducible_and_covers_tree() {
    let a = simulate(&bundled::a22(), 300, 9, 0.5).unwrap();
    let b = simulate(&bundled::a22(), 300, 9, 0.5).unwrap();
    assert_eq!(a, b);
    let names: BTreeSet<String> = a.activity_names().into_iter().map(String::from).collect();
    assert_eq!(names, bundled::a22().activities());
}
