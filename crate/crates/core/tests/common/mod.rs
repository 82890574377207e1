//! Naive reference implementations used as oracles, plus proptest
//! strategies. Nothing here shares code with the library beyond the log
//! type used to feed it.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use chaosfilter::{EventLog, ProcessTree};
use proptest::prelude::*;

pub type Variants = Vec<(Vec<String>, u64)>;

pub const END: &str = "⌋";
pub const START: &str = "⌊";

pub fn to_log(v: &Variants) -> EventLog {
    EventLog::from_variants(v.iter().map(|(t, m)| (t.clone(), *m))).unwrap()
}

pub fn variants(log: &EventLog) -> Variants {
    log.canonical_variants()
        .into_iter()
        .map(|(t, m)| (t.into_iter().map(String::from).collect(), m))
        .collect()
}

pub fn activities(v: &Variants) -> BTreeSet<String> {
    v.iter().flat_map(|(t, _)| t.iter().cloned()).collect()
}

pub fn project(v: &Variants, keep: &BTreeSet<String>) -> Variants {
    let mut out: BTreeMap<Vec<String>, u64> = BTreeMap::new();
    for (t, m) in v {
        let p: Vec<String> = t.iter().filter(|a| keep.contains(*a)).cloned().collect();
        if !p.is_empty() {
            *out.entry(p).or_insert(0) += m;
        }
    }
    out.into_iter().collect()
}

/// Smoothed successor (`forward`) or predecessor distribution of `a`, keyed
/// by label with the end (or start) sentinel included.
pub fn distribution(v: &Variants, a: &str, alpha: f64, forward: bool) -> BTreeMap<String, f64> {
    let acts = activities(v);
    let sentinel = if forward { END } else { START };
    let mut counts: BTreeMap<String, f64> = acts.iter().map(|x| (x.clone(), 0.0)).collect();
    counts.insert(sentinel.to_string(), 0.0);
    let mut total = 0.0;
    for (t, m) in v {
        for (i, x) in t.iter().enumerate() {
            if x != a {
                continue;
            }
            total += *m as f64;
            let neighbour = if forward {
                t.get(i + 1).map_or(sentinel, |s| s.as_str())
            } else if i == 0 {
                sentinel
            } else {
                t[i - 1].as_str()
            };
            *counts.get_mut(neighbour).unwrap() += *m as f64;
        }
    }
    let denom = alpha * (acts.len() as f64 + 1.0) + total;
    counts.into_iter().map(|(k, c)| (k, (alpha + c) / denom)).collect()
}

pub fn entropy_bits(p: impl IntoIterator<Item = f64>) -> f64 {
    p.into_iter().filter(|x| *x > 0.0).map(|x| -x * x.log2()).sum()
}

pub fn activity_entropy(v: &Variants, a: &str, alpha: f64) -> f64 {
    entropy_bits(distribution(v, a, alpha, true).into_values()) + entropy_bits(distribution(v, a, alpha, false).into_values())
}

pub fn log_entropy(v: &Variants, alpha: f64) -> f64 {
    activities(v).iter().map(|a| activity_entropy(v, a, alpha)).sum()
}

pub fn frequency(v: &Variants, a: &str) -> u64 {
    v.iter().map(|(t, m)| t.iter().filter(|x| *x == a).count() as u64 * m).sum()
}

/// Greedy removal by explicit projection. `score(log, candidate)` is
/// maximized; ties go to the lexicographically smallest name.
pub fn greedy_order(v: &Variants, mut score: impl FnMut(&Variants, &str) -> f64) -> Vec<String> {
    let mut current = v.clone();
    let mut order = Vec::new();
    while activities(&current).len() > 2 {
        let mut best: Option<(String, f64)> = None;
        for a in activities(&current) {
            let s = score(&current, &a);
            if best.as_ref().is_none_or(|(_, b)| s > b + 1e-9) {
                best = Some((a, s));
            }
        }
        let (a, _) = best.unwrap();
        let mut keep = activities(&current);
        keep.remove(&a);
        current = project(&current, &keep);
        order.push(a);
    }
    order
}

pub fn naive_direct(v: &Variants, laplace: bool) -> Vec<String> {
    greedy_order(v, |log, a| {
        let alpha = if laplace { 1.0 / activities(log).len() as f64 } else { 0.0 };
        activity_entropy(log, a, alpha)
    })
}

pub fn naive_indirect(v: &Variants, laplace: bool) -> Vec<String> {
    greedy_order(v, |log, a| {
        let mut keep = activities(log);
        keep.remove(a);
        let reduced = project(log, &keep);
        let alpha = if laplace { 1.0 / activities(&reduced).len() as f64 } else { 0.0 };
        -log_entropy(&reduced, alpha)
    })
}

/// Wins of each method: number of (log, other method) pairs it strictly beats.
pub fn brute_force_wins(values: &[Vec<f64>]) -> Vec<u64> {
    let mut wins = vec![0; values.len()];
    for (i, w) in wins.iter_mut().enumerate() {
        for j in 0..values[i].len() {
            for other in values {
                if values[i][j] < other[j] {
                    *w += 1;
                }
            }
        }
    }
    wins
}

/// Mean number of distinct next labels over a trace, from the explicit
/// finite language of a loop-free tree.
pub fn language_nondeterminism(language: &BTreeSet<Vec<String>>, trace: &[String]) -> Option<f64> {
    if !language.contains(trace) {
        return None;
    }
    let mut total = 0usize;
    for k in 0..trace.len() {
        let next: BTreeSet<&String> = language
            .iter()
            .filter(|w| w.len() > k && w[..k] == trace[..k])
            .map(|w| &w[k])
            .collect();
        total += next.len();
    }
    Some(total as f64 / trace.len() as f64)
}

pub fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| ((b'a' + i as u8) as char).to_string()).collect()
}

/// Random logs over 2 to `max_acts` activities.
pub fn arb_variants(max_acts: usize, max_len: usize, max_variants: usize) -> impl Strategy<Value = Variants> {
    (2..=max_acts).prop_flat_map(move |n| {
        prop::collection::vec(
            (prop::collection::vec(0..n, 1..=max_len), 1u64..6),
            1..=max_variants,
        )
        .prop_map(move |raw| {
            let alphabet = names(n);
            raw.into_iter()
                .map(|(t, m)| (t.into_iter().map(|i| alphabet[i].clone()).collect(), m))
                .collect()
        })
    })
}

/// Loop-free trees over distinct labels.
pub fn arb_loop_free_tree() -> impl Strategy<Value = ProcessTree> {
    let leaf = prop_oneof![
        6 => (0u8..8).prop_map(|i| ProcessTree::activity(((b'a' + i) as char).to_string())),
        1 => Just(ProcessTree::Silent),
    ];
    leaf.prop_recursive(3, 12, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..=3).prop_map(ProcessTree::seq),
            prop::collection::vec(inner.clone(), 2..=3).prop_map(ProcessTree::xor),
            prop::collection::vec(inner, 2..=3).prop_map(ProcessTree::par),
        ]
    })
    .prop_filter("labels must be distinct and present", |t| {
        let mut labels = Vec::new();
        collect_labels(t, &mut labels);
        let n = labels.len();
        labels.sort();
        labels.dedup();
        n > 0 && labels.len() == n
    })
}

fn collect_labels(t: &ProcessTree, out: &mut Vec<String>) {
    if let ProcessTree::Activity(a) = t {
        out.push(a.clone());
    }
    for c in t.children() {
        collect_labels(c, out);
    }
}
