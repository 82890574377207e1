//! Synthetic event logs: play-out of process trees and insertion of chaotic
//! activities at random positions, plus scoring of filters against the
//! known set of inserted activities.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eventlog::{EventLog, LogBuilder};
use crate::filters::{run_filter, FilterMethod, FilterSchedule};
pub use crate::tree::ProcessTree;

/// Play-outs tried per trace before giving up on a tree whose language
/// contains only the empty trace.
pub const MAX_REJECTIONS: usize = 1000;

pub const DEFAULT_LOOP_CONTINUE: f64 = 0.5;

/// Bundled stand-in process models.
pub mod bundled {
    use super::ProcessTree;

    /// 12 activities: choice, concurrency and a loop.
    pub const A12: &str = "seq(a, xor(b, c), par(seq(d, e), f), loop(g, h), xor(i, j), k, l)";

    /// 22 activities with nested concurrency, two loops and a skip.
    pub const A22: &str = "seq(a, par(xor(b, c), seq(d, e)), loop(seq(f, g), h), xor(seq(i, j), k, l), \
                           par(m, n, o), loop(p, xor(q, r)), xor(s, tau), par(t, u), v)";

    /// Seed used for the shipped 12-activity fixture log (25 traces).
    pub const A12_SEED: u64 = 5;
    pub const A12_TRACES: usize = 25;
    /// Base seed of the chaos injections run against the 12-activity log.
    pub const A12_CHAOS_SEED: u64 = 1;

    /// Seed used for the shipped 22-activity fixture log (400 traces).
    pub const A22_SEED: u64 = 22;
    pub const A22_TRACES: usize = 400;

    pub fn a12() -> ProcessTree {
        A12.parse().expect("bundled tree parses")
    }

    pub fn a22() -> ProcessTree {
        A22.parse().expect("bundled tree parses")
    }
}

fn play_out<R: Rng>(tree: &ProcessTree, rng: &mut R, p: f64, out: &mut Vec<String>) {
    match tree {
        ProcessTree::Activity(n) => out.push(n.clone()),
        ProcessTree::Silent => {}
        ProcessTree::Sequence(c) => c.iter().for_each(|t| play_out(t, rng, p, out)),
        ProcessTree::Choice(c) => {
            let i = rng.gen_range(0..c.len());
            play_out(&c[i], rng, p, out);
        }
        ProcessTree::Parallel(c) => {
            let mut branches: Vec<Vec<String>> = c
                .iter()
                .map(|t| {
                    let mut v = Vec::new();
                    play_out(t, rng, p, &mut v);
                    v.reverse();
                    v
                })
                .collect();
            // picking a branch with probability proportional to its remaining
            // length yields a uniformly random interleaving
            let mut remaining: usize = branches.iter().map(Vec::len).sum();
            while remaining > 0 {
                let mut pick = rng.gen_range(0..remaining);
                let branch = branches
                    .iter_mut()
                    .find(|b| {
                        if pick < b.len() {
                            true
                        } else {
                            pick -= b.len();
                            false
                        }
                    })
                    .expect("pick < remaining");
                out.push(branch.pop().expect("non-empty branch"));
                remaining -= 1;
            }
        }
        ProcessTree::Loop(body, redo) => {
            play_out(body, rng, p, out);
            while rng.gen_bool(p) {
                play_out(redo, rng, p, out);
                play_out(body, rng, p, out);
            }
        }
    }
}

/// Simulates `n_traces` independent play-outs of `tree`.
pub fn simulate(tree: &ProcessTree, n_traces: usize, seed: u64, loop_continue_p: f64) -> Result<EventLog> {
    tree.validate()?;
    if !(0.0..1.0).contains(&loop_continue_p) {
        return Err(Error::InvalidTree(format!(
            "loop continuation probability {loop_continue_p} not in [0, 1)"
        )));
    }
    if n_traces == 0 {
        return Err(Error::EmptyLog);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut builder = LogBuilder::new();
    for _ in 0..n_traces {
        let mut trace = Vec::new();
        let mut attempts = 0;
        while trace.is_empty() {
            if attempts == MAX_REJECTIONS {
                return Err(Error::EmptyLanguage(MAX_REJECTIONS));
            }
            play_out(tree, &mut rng, loop_continue_p, &mut trace);
            attempts += 1;
        }
        builder.push_names(&trace, 1)?;
    }
    Ok(builder.build())
}

/// A random tree over `n_activities` distinct labels `t0, t1, ...`.
pub fn random_tree(n_activities: usize, seed: u64) -> ProcessTree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names: Vec<String> = (0..n_activities.max(1)).map(|i| format!("t{i}")).collect();
    random_subtree(&mut rng, &names)
}

fn random_subtree<R: Rng>(rng: &mut R, names: &[String]) -> ProcessTree {
    if names.len() == 1 {
        let leaf = ProcessTree::Activity(names[0].clone());
        return match rng.gen_range(0..10) {
            0 => ProcessTree::xor(vec![ProcessTree::Silent, leaf]),
            1 => ProcessTree::looped(leaf, ProcessTree::Silent),
            _ => leaf,
        };
    }
    let op = rng.gen_range(0..4);
    let parts = if op == 3 { 2 } else { rng.gen_range(2..=names.len().min(4)) };
    let mut shuffled = names.to_vec();
    shuffled.shuffle(rng);
    // cut points splitting the names into `parts` non-empty groups
    let mut cuts: Vec<usize> = (1..names.len()).collect();
    cuts.shuffle(rng);
    cuts.truncate(parts - 1);
    cuts.sort_unstable();
    let mut groups = Vec::with_capacity(parts);
    let mut start = 0;
    for c in cuts.into_iter().chain([names.len()]) {
        groups.push(random_subtree(rng, &shuffled[start..c]));
        start = c;
    }
    match op {
        0 => ProcessTree::Sequence(groups),
        1 => ProcessTree::Choice(groups),
        2 => ProcessTree::Parallel(groups),
        _ => {
            let redo = groups.pop().expect("two groups");
            let body = groups.pop().expect("two groups");
            ProcessTree::looped(body, redo)
        }
    }
}

/// How many events each chaotic activity gets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChaosMode {
    /// As many as the most frequent original activity.
    Frequent,
    /// As many as the least frequent original activity.
    Infrequent,
    /// Uniformly between the two, drawn per chaotic activity.
    Uniform,
}

impl ChaosMode {
    pub const ALL: [ChaosMode; 3] = [ChaosMode::Uniform, ChaosMode::Frequent, ChaosMode::Infrequent];

    pub fn letter(self) -> char {
        match self {
            ChaosMode::Frequent => 'F',
            ChaosMode::Infrequent => 'I',
            ChaosMode::Uniform => 'U',
        }
    }
}

impl fmt::Display for ChaosMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChaosMode::Frequent => "frequent",
            ChaosMode::Infrequent => "infrequent",
            ChaosMode::Uniform => "uniform",
        })
    }
}

impl FromStr for ChaosMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "f" | "frequent" => Ok(ChaosMode::Frequent),
            "i" | "infrequent" => Ok(ChaosMode::Infrequent),
            "u" | "uniform" => Ok(ChaosMode::Uniform),
            other => Err(Error::InvalidChaosSpec(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChaosInsertionSpec {
    pub k: usize,
    pub mode: ChaosMode,
    pub seed: u64,
    pub name_prefix: String,
}

impl ChaosInsertionSpec {
    pub fn new(k: usize, mode: ChaosMode, seed: u64) -> Self {
        Self {
            k,
            mode,
            seed,
            name_prefix: "CHAOS_".to_string(),
        }
    }
}

/// A log with inserted chaotic activities and the ground truth.
#[derive(Debug, Clone)]
pub struct ChaosInjection {
    pub log: EventLog,
    /// Inserted activity names with their event counts.
    pub inserted: BTreeMap<String, u64>,
}

impl ChaosInjection {
    pub fn truth(&self) -> BTreeSet<String> {
        self.inserted.keys().cloned().collect()
    }
}

/// Inserts `spec.k` new activities at positions drawn uniformly with
/// replacement over all gaps of the log. A trace of length `m` has `m + 1`
/// gaps and every trace instance counts separately.
pub fn inject_chaos(log: &EventLog, spec: &ChaosInsertionSpec) -> Result<ChaosInjection> {
    if log.is_empty() {
        return Err(Error::EmptyLog);
    }
    if spec.k == 0 {
        return Err(Error::InvalidChaosSpec("k must be at least 1".into()));
    }
    let counts: Vec<u64> = log.activity_counts().into_iter().filter(|&c| c > 0).collect();
    let min = *counts.iter().min().expect("non-empty log");
    let max = *counts.iter().max().expect("non-empty log");

    let mut names = Vec::with_capacity(spec.k);
    let mut suffix = 1usize;
    while names.len() < spec.k {
        let candidate = format!("{}{}", spec.name_prefix, suffix);
        if log.alphabet().id(&candidate).is_none() {
            names.push(candidate);
        }
        suffix += 1;
    }

    let mut traces: Vec<Vec<String>> = Vec::with_capacity(log.num_traces() as usize);
    for (variant, mult) in log.canonical_variants() {
        let owned: Vec<String> = variant.into_iter().map(String::from).collect();
        for _ in 0..mult {
            traces.push(owned.clone());
        }
    }

    let mut inserted = BTreeMap::new();
    for (j, name) in names.iter().enumerate() {
        // one stream per chaotic activity keeps them independent
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(j as u64 + 1);
        let n_events = match spec.mode {
            ChaosMode::Frequent => max,
            ChaosMode::Infrequent => min,
            ChaosMode::Uniform => rng.gen_range(min..=max),
        };
        let mut offsets = Vec::with_capacity(traces.len());
        let mut total_gaps = 0usize;
        for t in &traces {
            offsets.push(total_gaps);
            total_gaps += t.len() + 1;
        }
        let mut slots: Vec<usize> = (0..n_events).map(|_| rng.gen_range(0..total_gaps)).collect();
        // descending so earlier positions stay valid while inserting
        slots.sort_unstable_by(|a, b| b.cmp(a));
        for slot in slots {
            let t = offsets.partition_point(|&o| o <= slot) - 1;
            traces[t].insert(slot - offsets[t], name.clone());
        }
        inserted.insert(name.clone(), n_events);
    }

    let mut builder = LogBuilder::with_alphabet(log.alphabet().clone());
    for t in &traces {
        builder.push_names(t, 1)?;
    }
    Ok(ChaosInjection {
        log: builder.build(),
        inserted,
    })
}

/// Outcome of filtering a log whose chaotic activities are known.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChaosReport {
    pub inserted: BTreeMap<String, u64>,
    pub schedule: FilterSchedule,
    /// Original activities removed before every inserted one was gone.
    pub incorrect_removals: usize,
    pub original_activities: usize,
}

/// Walks the removal order until all `truth` activities are removed and
/// counts the original activities removed on the way. If an inserted
/// activity survives into the retained pair, every original activity
/// counts as incorrectly removed.
pub fn score_filter_against_ground_truth(
    log_with_chaos: &EventLog,
    truth: &BTreeSet<String>,
    method: FilterMethod,
) -> Result<ChaosReport> {
    let schedule = run_filter(log_with_chaos, method);
    score_schedule(log_with_chaos, truth, schedule)
}

/// Scoring of an already computed schedule.
pub fn score_schedule(log: &EventLog, truth: &BTreeSet<String>, schedule: FilterSchedule) -> Result<ChaosReport> {
    if truth.is_empty() {
        return Err(Error::EmptyGroundTruth);
    }
    let freq = log.frequencies();
    if let Some(bad) = truth.iter().find(|t| !freq.contains_key(*t)) {
        return Err(Error::UnknownActivity(bad.clone()));
    }
    let original_activities = freq.len() - truth.len();
    let mut pending = truth.len();
    let mut incorrect = 0;
    for step in &schedule.removal_order {
        if truth.contains(&step.activity) {
            pending -= 1;
            if pending == 0 {
                break;
            }
        } else {
            incorrect += 1;
        }
    }
    if pending > 0 {
        incorrect = original_activities;
    }
    Ok(ChaosReport {
        inserted: truth.iter().map(|t| (t.clone(), freq[t])).collect(),
        schedule,
        incorrect_removals: incorrect,
        original_activities,
    })
}

/// One cell of a method × k × mode experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChaosCell {
    pub method: FilterMethod,
    pub k: usize,
    pub mode: ChaosMode,
    pub incorrect_removals: usize,
}

/// Seed of the injection for one (k, mode) cell. All methods of a cell see
/// the same injected log.
pub fn cell_seed(base: u64, k: usize, mode: ChaosMode) -> u64 {
    let m = match mode {
        ChaosMode::Uniform => 0,
        ChaosMode::Frequent => 1,
        ChaosMode::Infrequent => 2,
    };
    base.wrapping_mul(1_000_003).wrapping_add(k as u64 * 31 + m)
}

/// Runs every method on every (k, mode) injection of `log`.
pub fn evaluate_chaos(
    log: &EventLog,
    ks: &[usize],
    modes: &[ChaosMode],
    methods: &[FilterMethod],
    seed: u64,
) -> Result<Vec<ChaosCell>> {
    let mut cells = Vec::new();
    for &k in ks {
        for &mode in modes {
            let injection = inject_chaos(log, &ChaosInsertionSpec::new(k, mode, cell_seed(seed, k, mode)))?;
            let truth = injection.truth();
            for &method in methods {
                let report = score_filter_against_ground_truth(&injection.log, &truth, method)?;
                cells.push(ChaosCell {
                    method,
                    k,
                    mode,
                    incorrect_removals: report.incorrect_removals,
                });
            }
        }
    }
    Ok(cells)
}

/// Wide CSV: one row per method, one column per `k` and mode letter
/// (`1U,1F,1I,2U,...`), in the order the cells were produced.
pub fn chaos_table_csv(cells: &[ChaosCell]) -> String {
    let mut columns: Vec<(usize, ChaosMode)> = Vec::new();
    let mut methods: Vec<FilterMethod> = Vec::new();
    for c in cells {
        if !columns.contains(&(c.k, c.mode)) {
            columns.push((c.k, c.mode));
        }
        if !methods.contains(&c.method) {
            methods.push(c.method);
        }
    }
    let mut w = ::csv::Writer::from_writer(Vec::new());
    let header: Vec<String> = std::iter::once("method".to_string())
        .chain(columns.iter().map(|(k, m)| format!("{k}{}", m.letter())))
        .collect();
    w.write_record(&header).expect("in-memory write");
    for m in &methods {
        let mut row = vec![m.to_string()];
        for (k, mode) in &columns {
            let v = cells
                .iter()
                .find(|c| c.method == *m && c.k == *k && c.mode == *mode)
                .map_or(String::new(), |c| c.incorrect_removals.to_string());
            row.push(v);
        }
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequence_is_deterministic() {
        let tree: ProcessTree = "seq(a, b, c)".parse().unwrap();
        let log = simulate(&tree, 10, 3, 0.5).unwrap();
        assert_eq!(log, EventLog::from_variants([(vec!["a", "b", "c"], 10)]).unwrap());
    }

    #[test]
    fn parallel_shows_both_orders() {
        let tree: ProcessTree = "par(a, b)".parse().unwrap();
        let log = simulate(&tree, 200, 1, 0.5).unwrap();
        let ab = log.count_named(&["a", "b"]);
        let ba = log.count_named(&["b", "a"]);
        assert_eq!(ab + ba, 200);
        // 200 fair coin flips: 60..140 is a > 99.99% interval
        assert!((60..=140).contains(&ab), "ab = {ab}");
    }

    #[test]
    fn empty_language_is_rejected() {
        let tree: ProcessTree = "loop(tau, tau)".parse().unwrap();
        assert!(matches!(simulate(&tree, 1, 0, 0.5), Err(Error::EmptyLanguage(_))));
        assert!(simulate(&"a".parse().unwrap(), 1, 0, 1.0).is_err());
    }

    #[test]
    fn bundled_sizes() {
        assert_eq!(bundled::a12().activities().len(), 12);
        assert_eq!(bundled::a22().activities().len(), 22);
    }

    #[test]
    fn frequent_mode_matches_max_count() {
        let log = EventLog::from_variants([(vec!["a", "b", "a"], 15), (vec!["b"], 5)]).unwrap();
        let inj = inject_chaos(&log, &ChaosInsertionSpec::new(2, ChaosMode::Frequent, 9)).unwrap();
        for (name, n) in &inj.inserted {
            assert_eq!(*n, 30);
            assert_eq!(inj.log.count_named(&[name]), 30);
        }
        let inj = inject_chaos(&log, &ChaosInsertionSpec::new(1, ChaosMode::Infrequent, 9)).unwrap();
        assert_eq!(inj.inserted.values().copied().collect::<Vec<_>>(), [20]);
    }

    #[test]
    fn injection_is_pure_interleaving() {
        let log = simulate(&bundled::a12(), 25, 4, 0.5).unwrap();
        let inj = inject_chaos(&log, &ChaosInsertionSpec::new(3, ChaosMode::Uniform, 1)).unwrap();
        assert_eq!(inj.log.num_traces(), log.num_traces());
        assert_eq!(inj.log.project_names(log.alphabet().names()).unwrap(), log);
        let again = inject_chaos(&log, &ChaosInsertionSpec::new(3, ChaosMode::Uniform, 1)).unwrap();
        assert_eq!(inj.log, again.log);
    }

    #[test]
    fn names_avoid_collisions() {
        let log = EventLog::from_traces([["CHAOS_1", "b"]]).unwrap();
        let inj = inject_chaos(&log, &ChaosInsertionSpec::new(1, ChaosMode::Frequent, 0)).unwrap();
        assert_eq!(inj.truth().into_iter().collect::<Vec<_>>(), ["CHAOS_2"]);
    }

    #[test]
    fn scoring_rules() {
        let log = EventLog::from_variants([(vec!["a", "X", "b", "c"], 3), (vec!["X", "a", "b", "X", "c"], 2)]).unwrap();
        let truth: BTreeSet<String> = ["X".to_string()].into();
        let sched = run_filter(&log, FilterMethod::MostFrequentFirst);
        // X is the most frequent activity (7 events)
        let r = score_schedule(&log, &truth, sched).unwrap();
        assert_eq!(r.incorrect_removals, 0);
        let sched = run_filter(&log, FilterMethod::LeastFrequentFirst);
        let r = score_schedule(&log, &truth, sched).unwrap();
        assert_eq!(r.incorrect_removals, 3);
        assert!(matches!(
            score_filter_against_ground_truth(&log, &BTreeSet::new(), FilterMethod::LeastFrequentFirst),
            Err(Error::EmptyGroundTruth)
        ));
    }
}
