//! Directly-follows / directly-precedes statistics and the entropy of
//! activities computed from them.
//!
//! For an activity `a` the successor distribution has one category per
//! occurring activity plus the artificial end event, and the predecessor
//! distribution one per occurring activity plus the artificial start event.
//! With smoothing weight `α` the entry for category `b` is
//!
//! ```text
//! (α + #(a·b)) / (α·(|A|+1) + #(a))
//! ```
//!
//! which reduces to the plain ratio at `α = 0`. Entropies are in bits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eventlog::{ActivityId, EventLog, END_LABEL, START_LABEL};

/// Choice of the Laplace smoothing weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "alpha")]
pub enum Smoothing {
    None,
    Fixed(f64),
    /// `α = 1/|Activities(L)|` of the log being measured.
    Adaptive,
}

impl Smoothing {
    pub fn alpha(self, num_activities: usize) -> f64 {
        match self {
            Smoothing::None => 0.0,
            Smoothing::Fixed(a) => a,
            Smoothing::Adaptive if num_activities == 0 => 0.0,
            Smoothing::Adaptive => 1.0 / num_activities as f64,
        }
    }

    pub fn laplace(laplace: bool) -> Self {
        if laplace {
            Smoothing::Adaptive
        } else {
            Smoothing::None
        }
    }
}

/// Successor and predecessor counts of every occurring activity.
///
/// Activities are kept in lexicographic name order; category `n` (one past
/// the last activity) is the end sentinel in successor rows and the start
/// sentinel in predecessor rows.
#[derive(Debug, Clone)]
pub struct FollowStats {
    ids: Vec<ActivityId>,
    names: Vec<String>,
    activity_count: Vec<u64>,
    follow: Vec<u64>,
    precede: Vec<u64>,
}

impl FollowStats {
    pub fn build(log: &EventLog) -> Self {
        let keep = vec![true; log.alphabet().len()];
        Self::build_masked(log, &keep)
    }

    /// Statistics of `L↾{a | keep[a]}` computed without materializing the
    /// projection. Traces that would become empty contribute nothing, so
    /// the result equals `build(&log.project(..))`.
    pub fn build_masked(log: &EventLog, keep: &[bool]) -> Self {
        let alpha = log.alphabet();
        let mut present = vec![false; alpha.len()];
        for (trace, _) in log.variants() {
            for id in trace.events() {
                if keep[id.index()] {
                    present[id.index()] = true;
                }
            }
        }
        let mut ids: Vec<ActivityId> = (0..alpha.len() as u32)
            .map(ActivityId)
            .filter(|id| present[id.index()])
            .collect();
        ids.sort_by(|a, b| alpha.name(*a).cmp(alpha.name(*b)));
        let mut dense = vec![usize::MAX; alpha.len()];
        for (i, id) in ids.iter().enumerate() {
            dense[id.index()] = i;
        }
        let n = ids.len();
        let width = n + 1;
        let mut activity_count = vec![0u64; n];
        let mut follow = vec![0u64; n * width];
        let mut precede = vec![0u64; n * width];
        for (trace, mult) in log.variants() {
            let mut prev: Option<usize> = None;
            for id in trace.events() {
                if !keep[id.index()] {
                    continue;
                }
                let cur = dense[id.index()];
                activity_count[cur] += mult;
                match prev {
                    Some(p) => {
                        follow[p * width + cur] += mult;
                        precede[cur * width + p] += mult;
                    }
                    None => precede[cur * width + n] += mult,
                }
                prev = Some(cur);
            }
            if let Some(p) = prev {
                follow[p * width + n] += mult;
            }
        }
        Self {
            names: ids.iter().map(|&id| alpha.name(id).to_string()).collect(),
            ids,
            activity_count,
            follow,
            precede,
        }
    }

    /// Number of occurring activities `|Activities(L)|`.
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Categories per distribution: activities plus one sentinel.
    pub fn dim(&self) -> usize {
        self.ids.len() + 1
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn ids(&self) -> &[ActivityId] {
        &self.ids
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.names.binary_search_by(|n| n.as_str().cmp(name)).ok()
    }

    pub fn position_of_id(&self, id: ActivityId) -> Option<usize> {
        self.ids.iter().position(|&x| x == id)
    }

    pub fn activity_count_at(&self, i: usize) -> u64 {
        self.activity_count[i]
    }

    pub fn follow_row(&self, i: usize) -> &[u64] {
        let w = self.dim();
        &self.follow[i * w..(i + 1) * w]
    }

    pub fn precede_row(&self, i: usize) -> &[u64] {
        let w = self.dim();
        &self.precede[i * w..(i + 1) * w]
    }

    /// `#(a, L)`; zero for names that do not occur.
    pub fn activity_count(&self, a: &str) -> u64 {
        self.position(a).map_or(0, |i| self.activity_count[i])
    }

    /// `#(⟨a,b⟩, L^⌋)`; `b` may be the end label.
    pub fn follow_count(&self, a: &str, b: &str) -> u64 {
        self.pair_count(a, b, END_LABEL, |s, i| s.follow_row(i))
    }

    /// `#(⟨b,a⟩, L^⌊)`; `b` may be the start label.
    pub fn precede_count(&self, a: &str, b: &str) -> u64 {
        self.pair_count(a, b, START_LABEL, |s, i| s.precede_row(i))
    }

    fn pair_count<'s>(&'s self, a: &str, b: &str, sentinel: &str, row: impl Fn(&'s Self, usize) -> &'s [u64]) -> u64 {
        let Some(i) = self.position(a) else { return 0 };
        let j = if b == sentinel { Some(self.len()) } else { self.position(b) };
        j.map_or(0, |j| row(self, i)[j])
    }

    /// Category labels of successor vectors, in vector order.
    pub fn successor_labels(&self) -> Vec<&str> {
        self.names.iter().map(String::as_str).chain([END_LABEL]).collect()
    }

    /// Category labels of predecessor vectors, in vector order.
    pub fn predecessor_labels(&self) -> Vec<&str> {
        self.names.iter().map(String::as_str).chain([START_LABEL]).collect()
    }

    fn smoothed(&self, name: &str, alpha: f64, row: impl Fn(usize) -> Vec<u64>) -> Result<DistributionVector> {
        let dim = self.dim();
        match self.position(name) {
            Some(i) => {
                let denom = alpha * dim as f64 + self.activity_count[i] as f64;
                let entries = row(i).into_iter().map(|c| (alpha + c as f64) / denom).collect();
                Ok(DistributionVector { entries })
            }
            None if alpha > 0.0 => Ok(DistributionVector {
                entries: vec![1.0 / dim as f64; dim],
            }),
            None => Err(Error::UndefinedDistribution(name.to_string())),
        }
    }

    /// Entropy of the smoothed successor distribution of activity `i`.
    pub fn dfr_entropy_at(&self, i: usize, alpha: f64) -> f64 {
        smoothed_entropy(self.follow_row(i), self.activity_count[i], alpha)
    }

    /// Entropy of the smoothed predecessor distribution of activity `i`.
    pub fn dpr_entropy_at(&self, i: usize, alpha: f64) -> f64 {
        smoothed_entropy(self.precede_row(i), self.activity_count[i], alpha)
    }

    /// `H(a,L)` (or `Hˢ(a,L)` for `α > 0`) of activity `i`.
    pub fn activity_entropy_at(&self, i: usize, alpha: f64) -> f64 {
        self.dfr_entropy_at(i, alpha) + self.dpr_entropy_at(i, alpha)
    }

    /// Sum of the entropies of all occurring activities.
    pub fn total_entropy(&self, alpha: f64) -> f64 {
        (0..self.len()).map(|i| self.activity_entropy_at(i, alpha)).sum()
    }
}

/// Entropy of `(α + c_b) / (α·dim + total)` without building the vector.
fn smoothed_entropy(counts: &[u64], total: u64, alpha: f64) -> f64 {
    let denom = alpha * counts.len() as f64 + total as f64;
    if denom <= 0.0 {
        return 0.0;
    }
    counts
        .iter()
        .map(|&c| {
            let p = (alpha + c as f64) / denom;
            if p > 0.0 {
                -p * p.log2()
            } else {
                0.0
            }
        })
        .sum()
}

/// A categorical distribution over activities plus one sentinel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionVector {
    pub entries: Vec<f64>,
}

impl DistributionVector {
    pub fn sum(&self) -> f64 {
        self.entries.iter().sum()
    }

    pub fn entropy(&self) -> f64 {
        categorical_entropy(&self.entries)
    }
}

pub fn build_follow_stats(log: &EventLog) -> FollowStats {
    FollowStats::build(log)
}

/// Successor distribution `dfr(a, L)`, smoothed with weight `alpha`.
pub fn dfr_vector(stats: &FollowStats, a: &str, alpha: f64) -> Result<DistributionVector> {
    stats.smoothed(a, alpha, |i| stats.follow_row(i).to_vec())
}

/// Predecessor distribution `dpr(a, L)`, smoothed with weight `alpha`.
pub fn dpr_vector(stats: &FollowStats, a: &str, alpha: f64) -> Result<DistributionVector> {
    stats.smoothed(a, alpha, |i| stats.precede_row(i).to_vec())
}

/// `-Σ p log2 p`, with `0 log 0 = 0`.
pub fn categorical_entropy(p: &[f64]) -> f64 {
    p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -x * x.log2())
        .sum()
}

pub fn activity_entropy(stats: &FollowStats, a: &str, alpha: f64) -> Result<f64> {
    Ok(dfr_vector(stats, a, alpha)?.entropy() + dpr_vector(stats, a, alpha)?.entropy())
}

/// Total log entropy `H(L)` with a fixed smoothing weight.
pub fn log_entropy(log: &EventLog, alpha: f64) -> f64 {
    FollowStats::build(log).total_entropy(alpha)
}

/// Total log entropy with the weight resolved from the log itself.
pub fn log_entropy_with(log: &EventLog, smoothing: Smoothing) -> f64 {
    let stats = FollowStats::build(log);
    let alpha = smoothing.alpha(stats.len());
    stats.total_entropy(alpha)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyRow {
    pub activity: String,
    pub h_dfr: f64,
    pub h_dpr: f64,
    pub h_total: f64,
}

/// Per-activity entropies of one log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub alpha: f64,
    pub rows: Vec<EntropyRow>,
}

impl EntropyReport {
    pub fn new(stats: &FollowStats, alpha: f64) -> Self {
        let rows = (0..stats.len())
            .map(|i| {
                let h_dfr = stats.dfr_entropy_at(i, alpha);
                let h_dpr = stats.dpr_entropy_at(i, alpha);
                EntropyRow {
                    activity: stats.names[i].clone(),
                    h_dfr,
                    h_dpr,
                    h_total: h_dfr + h_dpr,
                }
            })
            .collect();
        Self { alpha, rows }
    }

    pub fn for_log(log: &EventLog, smoothing: Smoothing) -> Self {
        let stats = FollowStats::build(log);
        let alpha = smoothing.alpha(stats.len());
        Self::new(&stats, alpha)
    }

    pub fn get(&self, activity: &str) -> Option<&EntropyRow> {
        self.rows.iter().find(|r| r.activity == activity)
    }

    pub fn total(&self) -> f64 {
        self.rows.iter().map(|r| r.h_total).sum()
    }

    /// CSV with header `activity,h_dfr,h_dpr,h_total,alpha`.
    pub fn to_csv(&self) -> String {
        let mut w = ::csv::Writer::from_writer(Vec::new());
        w.write_record(["activity", "h_dfr", "h_dpr", "h_total", "alpha"])
            .expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                r.activity.clone(),
                r.h_dfr.to_string(),
                r.h_dpr.to_string(),
                r.h_total.to_string(),
                self.alpha.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("UTF-8")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn worked() -> EventLog {
        EventLog::from_variants([
            (vec!["a", "b", "c", "x"], 10),
            (vec!["a", "b", "x", "c"], 10),
            (vec!["a", "x", "b", "c"], 10),
        ])
        .unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn worked_counts() {
        let s = FollowStats::build(&worked());
        assert_eq!(s.activity_count("a"), 30);
        assert_eq!(s.follow_count("a", "b"), 20);
        assert_eq!(s.follow_count("a", "x"), 10);
        assert_eq!(s.precede_count("a", START_LABEL), 30);
    }

    #[test]
    fn single_event_log() {
        let s = FollowStats::build(&EventLog::from_traces([["a"]]).unwrap());
        assert_eq!(s.follow_count("a", END_LABEL), 1);
        assert_eq!(s.precede_count("a", START_LABEL), 1);
    }

    #[test]
    fn worked_vectors() {
        let s = FollowStats::build(&worked());
        assert_eq!(s.successor_labels(), ["a", "b", "c", "x", "⌋"]);
        let dfr = dfr_vector(&s, "a", 0.0).unwrap();
        let expected = [0.0, 2.0 / 3.0, 0.0, 1.0 / 3.0, 0.0];
        for (x, y) in dfr.entries.iter().zip(expected) {
            assert!(close(*x, y, 1e-12));
        }
        let dpr = dpr_vector(&s, "a", 0.0).unwrap();
        assert_eq!(dpr.entries, [0.0, 0.0, 0.0, 0.0, 1.0]);
        let dpr_x = dpr_vector(&s, "x", 0.0).unwrap();
        for (x, y) in dpr_x.entries.iter().zip([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0, 0.0]) {
            assert!(close(*x, y, 1e-12));
        }
    }

    #[test]
    fn smoothed_entry() {
        let s = FollowStats::build(&worked());
        let v = dfr_vector(&s, "a", 0.25).unwrap();
        assert!(close(v.entries[1], 20.25 / 31.25, 1e-12));
        assert!(close(v.sum(), 1.0, 1e-9));
    }

    #[test]
    fn heavy_prior_is_uniform() {
        let s = FollowStats::build(&worked());
        let v = dfr_vector(&s, "x", 1e12).unwrap();
        for e in v.entries {
            assert!(close(e, 0.2, 1e-9));
        }
    }

    #[test]
    fn unseen_activity() {
        let s = FollowStats::build(&worked());
        assert!(matches!(dfr_vector(&s, "zz", 0.0), Err(Error::UndefinedDistribution(_))));
        let v = dpr_vector(&s, "zz", 0.5).unwrap();
        assert!(close(v.sum(), 1.0, 1e-12));
    }

    #[test]
    fn categorical_examples() {
        assert!(close(categorical_entropy(&[0.0, 2.0 / 3.0, 0.0, 1.0 / 3.0, 0.0]), 0.918, 1e-3));
        assert_eq!(categorical_entropy(&[0.0, 1.0, 0.0]), 0.0);
        assert!(close(categorical_entropy(&[0.25; 4]), 2.0, 1e-12));
    }

    #[test]
    fn worked_activity_entropies() {
        let s = FollowStats::build(&worked());
        for (a, h) in [("a", 0.918), ("b", 1.837), ("c", 1.837), ("x", 3.170)] {
            assert!(close(activity_entropy(&s, a, 0.0).unwrap(), h, 1e-3), "{a}");
        }
        assert!(close(log_entropy(&worked(), 0.0), 7.762, 4e-3));
    }

    #[test]
    fn singleton_activity_smoothing() {
        let log = EventLog::from_variants([(vec!["a", "b", "c"], 5), (vec!["a", "z", "c"], 1)]).unwrap();
        let s = FollowStats::build(&log);
        assert_eq!(activity_entropy(&s, "z", 0.0).unwrap(), 0.0);
        assert!(activity_entropy(&s, "z", 1.0 / 4.0).unwrap() > 0.0);
    }

    #[test]
    fn deterministic_log_has_zero_entropy() {
        let log = EventLog::from_variants([(vec!["a", "b"], 7)]).unwrap();
        assert_eq!(log_entropy(&log, 0.0), 0.0);
    }

    #[test]
    fn fast_path_matches_vectors() {
        let s = FollowStats::build(&worked());
        for alpha in [0.0, 0.25, 3.0] {
            for name in s.names().to_vec() {
                let i = s.position(&name).unwrap();
                let slow = activity_entropy(&s, &name, alpha).unwrap();
                assert_eq!(slow, s.activity_entropy_at(i, alpha));
            }
        }
    }

    #[test]
    fn report_csv() {
        let r = EntropyReport::for_log(&worked(), Smoothing::None);
        let csv = r.to_csv();
        assert!(csv.starts_with("activity,h_dfr,h_dpr,h_total,alpha\n"));
        assert_eq!(csv.lines().count(), 5);
        let x = r.get("x").unwrap();
        assert_eq!(x.h_total, x.h_dfr + x.h_dpr);
    }
}
