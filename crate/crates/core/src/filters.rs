//! Greedy activity filters and the removal schedules they produce.
//!
//! Every filter repeatedly removes one activity from the (projected) log
//! until two activities remain. The entropy filters either drop the activity
//! with the highest entropy (direct) or the activity whose removal leaves the
//! lowest total log entropy (indirect). Ties are broken toward the
//! lexicographically smallest activity name; values within [`TIE_EPSILON`]
//! count as ties.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::entropy::{FollowStats, Smoothing};
use crate::error::{Error, Result};
use crate::eventlog::EventLog;

/// Criterion values closer than this are treated as equal.
pub const TIE_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FilterMethod {
    DirectEntropy { laplace: bool },
    IndirectEntropy { laplace: bool },
    LeastFrequentFirst,
    MostFrequentFirst,
    Random { seed: u64 },
}

impl FilterMethod {
    /// Builds a method from its loose parts, enforcing that `laplace` only
    /// applies to entropy filters and that `random` carries a seed.
    pub fn from_parts(kind: &str, laplace: bool, seed: Option<u64>) -> Result<Self> {
        let method = match kind {
            "direct-entropy" | "direct" => FilterMethod::DirectEntropy { laplace },
            "indirect-entropy" | "indirect" => FilterMethod::IndirectEntropy { laplace },
            "least-frequent-first" | "lff" => FilterMethod::LeastFrequentFirst,
            "most-frequent-first" | "mff" => FilterMethod::MostFrequentFirst,
            "random" => FilterMethod::Random {
                seed: seed.ok_or_else(|| Error::InvalidMethod("random requires a seed".into()))?,
            },
            other => return Err(Error::UnknownMethod(other.to_string())),
        };
        if laplace && !method.is_entropy() {
            return Err(Error::InvalidMethod(format!("laplace smoothing does not apply to {kind}")));
        }
        if seed.is_some() && !matches!(method, FilterMethod::Random { .. }) {
            return Err(Error::InvalidMethod(format!("a seed does not apply to {kind}")));
        }
        Ok(method)
    }

    /// The seven methods compared in the experiments, in a fixed order.
    pub fn all(seed: u64) -> Vec<FilterMethod> {
        vec![
            FilterMethod::DirectEntropy { laplace: false },
            FilterMethod::DirectEntropy { laplace: true },
            FilterMethod::IndirectEntropy { laplace: false },
            FilterMethod::IndirectEntropy { laplace: true },
            FilterMethod::LeastFrequentFirst,
            FilterMethod::MostFrequentFirst,
            FilterMethod::Random { seed },
        ]
    }

    pub fn is_entropy(self) -> bool {
        matches!(
            self,
            FilterMethod::DirectEntropy { .. } | FilterMethod::IndirectEntropy { .. }
        )
    }

    pub fn kind(self) -> &'static str {
        match self {
            FilterMethod::DirectEntropy { .. } => "direct-entropy",
            FilterMethod::IndirectEntropy { .. } => "indirect-entropy",
            FilterMethod::LeastFrequentFirst => "least-frequent-first",
            FilterMethod::MostFrequentFirst => "most-frequent-first",
            FilterMethod::Random { .. } => "random",
        }
    }

    pub fn laplace(self) -> bool {
        matches!(
            self,
            FilterMethod::DirectEntropy { laplace: true } | FilterMethod::IndirectEntropy { laplace: true }
        )
    }

    fn smoothing(self) -> Smoothing {
        Smoothing::laplace(self.laplace())
    }

    /// Whether larger criterion values are removed first.
    fn descending(self) -> bool {
        matches!(
            self,
            FilterMethod::DirectEntropy { .. } | FilterMethod::MostFrequentFirst
        )
    }
}

/// `direct-entropy`, `direct-entropy+laplace`, `random:42`, ...
impl fmt::Display for FilterMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FilterMethod::Random { seed } => write!(f, "random:{seed}"),
            m if m.laplace() => write!(f, "{}+laplace", m.kind()),
            m => f.write_str(m.kind()),
        }
    }
}

impl FromStr for FilterMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(seed) = s.strip_prefix("random:") {
            let seed = seed
                .parse()
                .map_err(|_| Error::InvalidMethod(format!("bad seed in {s:?}")))?;
            return Ok(FilterMethod::Random { seed });
        }
        match s.strip_suffix("+laplace") {
            Some(kind) => FilterMethod::from_parts(kind, true, None),
            None => FilterMethod::from_parts(s, false, None),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleStep {
    pub activity: String,
    /// Entropy, log entropy after removal, frequency, or 0 for random.
    pub criterion: f64,
    /// Smoothing weight used to compute `criterion` (0 when unsmoothed).
    pub alpha: f64,
}

/// The removal sequence of one filter run on one log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSchedule {
    pub method: FilterMethod,
    pub removal_order: Vec<ScheduleStep>,
    /// Activities left at the end, ordered as they would be removed next.
    pub retained: Vec<ScheduleStep>,
    pub source_digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

impl FilterSchedule {
    pub fn len(&self) -> usize {
        self.removal_order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.removal_order.is_empty()
    }

    pub fn removed_names(&self) -> impl Iterator<Item = &str> {
        self.removal_order.iter().map(|s| s.activity.as_str())
    }

    /// Removal order followed by the retained activities.
    pub fn full_ranking(&self) -> Vec<String> {
        full_ranking(self)
    }

    /// CSV with header `step,activity,criterion,method,alpha,retained`.
    pub fn to_csv(&self) -> String {
        let mut w = ::csv::Writer::from_writer(Vec::new());
        w.write_record(["step", "activity", "criterion", "method", "alpha", "retained"])
            .expect("in-memory write");
        let method = self.method.to_string();
        let rows = self
            .removal_order
            .iter()
            .map(|s| (s, false))
            .chain(self.retained.iter().map(|s| (s, true)));
        for (i, (step, retained)) in rows.enumerate() {
            w.write_record([
                (i + 1).to_string(),
                step.activity.clone(),
                step.criterion.to_string(),
                method.clone(),
                step.alpha.to_string(),
                retained.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("UTF-8")
    }
}

/// Picks the best candidate. `candidates` must be in name order; a later
/// candidate wins only if it beats the incumbent by more than the tie
/// tolerance.
fn pick(candidates: impl IntoIterator<Item = (usize, f64)>, maximize: bool) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in candidates {
        let better = match best {
            None => true,
            Some((_, b)) if maximize => v > b + TIE_EPSILON,
            Some((_, b)) => v < b - TIE_EPSILON,
        };
        if better {
            best = Some((i, v));
        }
    }
    best
}

/// Orders the retained activities in removal direction (stable on name).
fn order_retained(mut steps: Vec<ScheduleStep>, descending: bool) -> Vec<ScheduleStep> {
    steps.sort_by(|a, b| a.activity.cmp(&b.activity));
    let mut out = Vec::with_capacity(steps.len());
    while !steps.is_empty() {
        let (i, _) = pick(steps.iter().map(|s| s.criterion).enumerate(), descending).expect("non-empty");
        out.push(steps.remove(i));
    }
    out
}

/// Criterion of every active activity in one step, in name order.
fn step_criteria(log: &EventLog, keep: &mut [bool], method: FilterMethod) -> Vec<ScheduleStep> {
    let stats = FollowStats::build_masked(log, keep);
    let smoothing = method.smoothing();
    match method {
        FilterMethod::DirectEntropy { .. } => {
            let alpha = smoothing.alpha(stats.len());
            (0..stats.len())
                .map(|i| ScheduleStep {
                    activity: stats.names()[i].clone(),
                    criterion: stats.activity_entropy_at(i, alpha),
                    alpha,
                })
                .collect()
        }
        FilterMethod::IndirectEntropy { .. } => stats
            .ids()
            .iter()
            .zip(stats.names())
            .map(|(&id, name)| {
                keep[id.index()] = false;
                let reduced = FollowStats::build_masked(log, keep);
                keep[id.index()] = true;
                let alpha = smoothing.alpha(reduced.len());
                ScheduleStep {
                    activity: name.clone(),
                    criterion: reduced.total_entropy(alpha),
                    alpha,
                }
            })
            .collect(),
        FilterMethod::LeastFrequentFirst | FilterMethod::MostFrequentFirst => (0..stats.len())
            .map(|i| ScheduleStep {
                activity: stats.names()[i].clone(),
                criterion: stats.activity_count_at(i) as f64,
                alpha: 0.0,
            })
            .collect(),
        FilterMethod::Random { .. } => unreachable!("random schedules are not greedy"),
    }
}

/// Runs `method` on `log` until two activities are left.
pub fn run_filter(log: &EventLog, method: FilterMethod) -> FilterSchedule {
    let source_digest = log.digest();
    let mut names: Vec<String> = log.activity_names().into_iter().map(String::from).collect();
    let total = names.len();
    let diagnostic = (total < 3).then(|| {
        format!("log has {total} activities; at least 3 are needed for any removal")
    });

    if let FilterMethod::Random { seed } = method {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        names.shuffle(&mut rng);
        let cut = total.saturating_sub(2);
        let step = |n: &String| ScheduleStep {
            activity: n.clone(),
            criterion: 0.0,
            alpha: 0.0,
        };
        return FilterSchedule {
            method,
            removal_order: names[..cut].iter().map(step).collect(),
            retained: names[cut..].iter().map(step).collect(),
            source_digest,
            diagnostic,
        };
    }

    let mut keep = vec![false; log.alphabet().len()];
    for id in log.activities() {
        keep[id.index()] = true;
    }
    let descending = method.descending();
    let mut removal_order = Vec::with_capacity(total.saturating_sub(2));
    let mut active = total;
    while active > 2 {
        let mut criteria = step_criteria(log, &mut keep, method);
        let (i, _) = pick(criteria.iter().map(|s| s.criterion).enumerate(), descending)
            .expect("more than two active activities");
        let chosen = criteria.swap_remove(i);
        let id = log.alphabet().id(&chosen.activity).expect("name from this log");
        keep[id.index()] = false;
        removal_order.push(chosen);
        active -= 1;
    }
    let retained = if active == 0 {
        Vec::new()
    } else {
        order_retained(step_criteria(log, &mut keep, method), descending)
    };
    FilterSchedule {
        method,
        removal_order,
        retained,
        source_digest,
        diagnostic,
    }
}

/// Reconstructs the log after the first `steps` removals of `schedule`.
pub fn materialize(log: &EventLog, schedule: &FilterSchedule, steps: usize) -> Result<EventLog> {
    let actual = log.digest();
    if actual != schedule.source_digest {
        return Err(Error::StaleSchedule {
            expected: schedule.source_digest.clone(),
            actual,
        });
    }
    if steps > schedule.removal_order.len() {
        return Err(Error::StepsOutOfRange {
            steps,
            available: schedule.removal_order.len(),
        });
    }
    if steps == 0 {
        return Ok(log.clone());
    }
    log.without_names(schedule.removed_names().take(steps))
}

pub fn full_ranking(schedule: &FilterSchedule) -> Vec<String> {
    schedule
        .removal_order
        .iter()
        .chain(&schedule.retained)
        .map(|s| s.activity.clone())
        .collect()
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

    #[test]
    fn method_parsing() {
        for m in FilterMethod::all(9) {
            assert_eq!(m.to_string().parse::<FilterMethod>().unwrap(), m);
        }
        assert!(FilterMethod::from_parts("least-frequent-first", true, None).is_err());
        assert!(FilterMethod::from_parts("random", false, None).is_err());
        assert!(FilterMethod::from_parts("direct-entropy", false, Some(3)).is_err());
        assert!(matches!("nope".parse::<FilterMethod>(), Err(Error::UnknownMethod(_))));
    }

    #[test]
    fn method_json_shape() {
        let json = serde_json::to_string(&FilterMethod::DirectEntropy { laplace: true }).unwrap();
        assert_eq!(json, r#"{"kind":"direct-entropy","laplace":true}"#);
        let json = serde_json::to_string(&FilterMethod::Random { seed: 4 }).unwrap();
        assert_eq!(json, r#"{"kind":"random","seed":4}"#);
    }

    #[test]
    fn direct_removes_x_first() {
        let s = run_filter(&worked(), FilterMethod::DirectEntropy { laplace: false });
        assert_eq!(s.removal_order.len(), 2);
        assert_eq!(s.removal_order[0].activity, "x");
        assert!((s.removal_order[0].criterion - 3.170).abs() < 1e-3);
        // with x gone every activity has zero entropy, so the tie goes to `a`
        assert_eq!(s.removal_order[1].activity, "a");
        assert_eq!(s.full_ranking(), ["x", "a", "b", "c"]);
    }

    #[test]
    fn least_frequent_ranking() {
        let log = EventLog::from_traces([vec!["a"], vec!["b", "b"], vec!["c", "c", "c"]]).unwrap();
        let s = run_filter(&log, FilterMethod::LeastFrequentFirst);
        assert_eq!(s.full_ranking(), ["a", "b", "c"]);
        let s = run_filter(&log, FilterMethod::MostFrequentFirst);
        assert_eq!(s.full_ranking(), ["c", "b", "a"]);
    }

    #[test]
    fn random_is_seeded() {
        let a = run_filter(&worked(), FilterMethod::Random { seed: 5 });
        let b = run_filter(&worked(), FilterMethod::Random { seed: 5 });
        assert_eq!(a, b);
        assert_eq!(a.len(), 2);
        assert!(a.removal_order.iter().all(|s| s.criterion == 0.0));
    }

    #[test]
    fn small_logs_yield_empty_schedule() {
        let log = EventLog::from_traces([["a", "b"]]).unwrap();
        let s = run_filter(&log, FilterMethod::IndirectEntropy { laplace: true });
        assert!(s.is_empty());
        assert_eq!(s.retained.len(), 2);
        assert!(s.diagnostic.is_some());
    }

    #[test]
    fn materialize_steps() {
        let log = worked();
        let s = run_filter(&log, FilterMethod::DirectEntropy { laplace: false });
        assert_eq!(materialize(&log, &s, 0).unwrap(), log);
        let one = materialize(&log, &s, 1).unwrap();
        assert_eq!(one.activity_names(), ["a", "b", "c"]);
        assert_eq!(one, EventLog::from_variants([(vec!["a", "b", "c"], 30)]).unwrap());
        assert_eq!(materialize(&log, &s, 2).unwrap().activity_names().len(), 2);
        assert!(matches!(materialize(&log, &s, 3), Err(Error::StepsOutOfRange { .. })));
        assert!(matches!(materialize(&one, &s, 1), Err(Error::StaleSchedule { .. })));
    }

    #[test]
    fn schedule_csv() {
        let s = run_filter(&worked(), FilterMethod::DirectEntropy { laplace: true });
        let csv = s.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "step,activity,criterion,method,alpha,retained");
        assert!(lines.next().unwrap().starts_with("1,x,"));
        assert_eq!(csv.lines().count(), 5);
    }
}
