//! Model quality on a log and statistics for comparing filters across logs.

mod replay;
mod stats;

use serde::{Deserialize, Serialize};

pub use replay::{Replayer, TraceReplay, MAX_REPLAY_STATES};
pub use stats::{
    f_score, kendall_tau_b, ranks_from_order, value_at_threshold, winning_number, RankMatrix, TauTest,
    WinningNumbers, EXACT_TAU_BELOW,
};

use crate::discovery::{discover, DiscoveryConfig};
use crate::error::Result;
use crate::eventlog::EventLog;
use crate::filters::{materialize, FilterSchedule};
use crate::tree::ProcessTree;

/// How per-step enabled-label counts are averaged.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Averaging {
    /// Mean per trace, then multiplicity-weighted mean over traces.
    #[default]
    PerTrace,
    /// Mean over all visible steps of all traces.
    Pooled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayOutcome {
    /// `None` when no trace fits.
    pub nondeterminism: Option<f64>,
    pub fitness_fraction: f64,
    pub accepted_traces: u64,
    pub total_traces: u64,
    /// Traces whose replay search was abandoned; counted as not fitting.
    pub undecided_traces: u64,
}

/// Replays every variant of `log` on `tree`.
pub fn replay_nondeterminism(tree: &ProcessTree, log: &EventLog, averaging: Averaging) -> ReplayOutcome {
    let mut replayer = Replayer::new(tree);
    let (mut accepted, mut undecided) = (0u64, 0u64);
    let (mut weighted_sum, mut steps_sum, mut steps) = (0.0, 0u64, 0u64);
    for (trace, mult) in log.variants() {
        match replayer.replay(&log.names_of(trace)) {
            TraceReplay::Accepted(counts) => {
                accepted += mult;
                weighted_sum += mult as f64 * counts.iter().sum::<usize>() as f64 / counts.len() as f64;
                steps_sum += mult * counts.iter().sum::<usize>() as u64;
                steps += mult * counts.len() as u64;
            }
            TraceReplay::Rejected => {}
            TraceReplay::Undecided => undecided += mult,
        }
    }
    let total = log.num_traces();
    let nondeterminism = (accepted > 0).then(|| match averaging {
        Averaging::PerTrace => weighted_sum / accepted as f64,
        Averaging::Pooled => steps_sum as f64 / steps as f64,
    });
    ReplayOutcome {
        nondeterminism,
        fitness_fraction: if total == 0 { 0.0 } else { accepted as f64 / total as f64 },
        accepted_traces: accepted,
        total_traces: total,
        undecided_traces: undecided,
    }
}

/// Share of traces (with multiplicity) that fit `tree`.
pub fn fitness_fraction(tree: &ProcessTree, log: &EventLog) -> f64 {
    replay_nondeterminism(tree, log, Averaging::PerTrace).fitness_fraction
}

/// Model quality after removing `steps` activities with one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityRecord {
    pub log_id: String,
    pub method: String,
    pub steps: usize,
    pub explained_ratio: f64,
    pub nondeterminism: Option<f64>,
    pub fitness_fraction: f64,
    /// Nondeterminism of the flower model over the remaining activities.
    pub flower_baseline: f64,
}

/// Discovers and replays the log after each prefix of the schedule,
/// from no removal to all removals.
pub fn explained_activity_curve(
    log: &EventLog,
    schedule: &FilterSchedule,
    config: DiscoveryConfig,
    averaging: Averaging,
) -> Result<Vec<QualityRecord>> {
    let total = log.activities().len();
    let log_id = log.digest();
    (0..=schedule.removal_order.len())
        .map(|steps| {
            let filtered = materialize(log, schedule, steps)?;
            let tree = discover(&filtered, config);
            let outcome = replay_nondeterminism(&tree, &filtered, averaging);
            Ok(QualityRecord {
                log_id: log_id.clone(),
                method: schedule.method.to_string(),
                steps,
                explained_ratio: (total - steps) as f64 / total as f64,
                nondeterminism: outcome.nondeterminism,
                fitness_fraction: outcome.fitness_fraction,
                flower_baseline: filtered.activities().len() as f64,
            })
        })
        .collect()
}

pub const CURVE_HEADER: [&str; 6] = [
    "method",
    "steps",
    "explained_ratio",
    "nondeterminism",
    "fitness_fraction",
    "flower_baseline",
];

/// CSV with header `method,steps,explained_ratio,nondeterminism,fitness_fraction,flower_baseline`.
/// Undefined nondeterminism is an empty field.
pub fn curve_to_csv(records: &[QualityRecord]) -> String {
    let mut w = ::csv::Writer::from_writer(Vec::new());
    w.write_record(CURVE_HEADER).expect("in-memory write");
    for r in records {
        w.write_record([
            r.method.clone(),
            r.steps.to_string(),
            r.explained_ratio.to_string(),
            r.nondeterminism.map_or(String::new(), |v| v.to_string()),
            r.fitness_fraction.to_string(),
            r.flower_baseline.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("UTF-8")
}

/// Parses the output of [`curve_to_csv`]. `log_id` is not part of the CSV
/// and is left empty.
pub fn curve_from_csv(text: &str) -> Result<Vec<QualityRecord>> {
    use crate::error::Error;
    let mut reader = ::csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| Error::Csv { row, message: e.to_string() })?;
        let field = |k: usize| rec.get(k).unwrap_or("").trim();
        let num = |k: usize| -> Result<f64> {
            field(k).parse::<f64>().map_err(|_| Error::Csv {
                row,
                message: format!("column {} is not a number: {:?}", CURVE_HEADER[k], field(k)),
            })
        };
        out.push(QualityRecord {
            log_id: String::new(),
            method: field(0).to_string(),
            steps: num(1)? as usize,
            explained_ratio: num(2)?,
            nondeterminism: if field(3).is_empty() { None } else { Some(num(3)?) },
            fitness_fraction: num(4)?,
            flower_baseline: num(5)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::{run_filter, FilterMethod};

    fn t(s: &str) -> ProcessTree {
        s.parse().unwrap()
    }

    fn nd(tree: &str, log: &EventLog) -> (Option<f64>, f64) {
        let o = replay_nondeterminism(&t(tree), log, Averaging::PerTrace);
        (o.nondeterminism, o.fitness_fraction)
    }

    #[test]
    fn sequence_is_deterministic() {
        let log = EventLog::from_variants([(vec!["a", "b", "c"], 4)]).unwrap();
        assert_eq!(nd("seq(a, b, c)", &log), (Some(1.0), 1.0));
    }

    #[test]
    fn flower_enables_everything() {
        let log = EventLog::from_traces([vec!["a", "b", "c"], vec!["c", "c"], vec!["b"]]).unwrap();
        assert_eq!(nd("loop(tau, xor(a, b, c))", &log), (Some(3.0), 1.0));
    }

    #[test]
    fn choice_counts_initial_closure() {
        let log = EventLog::from_traces([["a"]]).unwrap();
        assert_eq!(nd("xor(a, b)", &log), (Some(2.0), 1.0));
    }

    #[test]
    fn loop_exit_is_silent() {
        // before b: {b}; before c: {b, c} after the redo closes the body
        let log = EventLog::from_traces([["a", "b", "c"]]).unwrap();
        assert_eq!(nd("seq(a, loop(b, tau), c)", &log), (Some((1.0 + 1.0 + 2.0) / 3.0), 1.0));
    }

    #[test]
    fn parallel_counts() {
        let log = EventLog::from_traces([["a", "b"]]).unwrap();
        assert_eq!(nd("par(a, b)", &log), (Some(1.5), 1.0));
    }

    #[test]
    fn unfitting_traces_are_excluded() {
        let log = EventLog::from_variants([(vec!["a", "b"], 3), (vec!["b", "a"], 1)]).unwrap();
        assert_eq!(nd("seq(a, b)", &log), (Some(1.0), 0.75));
        let log = EventLog::from_traces([["b", "a"]]).unwrap();
        assert_eq!(nd("seq(a, b)", &log), (None, 0.0));
    }

    #[test]
    fn pooled_differs_from_per_trace() {
        let log = EventLog::from_traces([vec!["a"], vec!["a", "b", "b", "b"]]).unwrap();
        let tree = t("seq(xor(a, c), loop(tau, b))");
        // per trace: ⟨a⟩ -> 2; ⟨a,b,b,b⟩ -> (2+1+1+1)/4
        let per = replay_nondeterminism(&tree, &log, Averaging::PerTrace).nondeterminism.unwrap();
        let pooled = replay_nondeterminism(&tree, &log, Averaging::Pooled).nondeterminism.unwrap();
        assert!((per - (2.0 + 1.25) / 2.0).abs() < 1e-12);
        assert!((pooled - 7.0 / 5.0).abs() < 1e-12);
    }

    #[test]
    fn curve_shape_and_csv() {
        let log = EventLog::from_variants([
            (vec!["a", "b", "c", "x"], 10),
            (vec!["a", "b", "x", "c"], 10),
            (vec!["a", "x", "b", "c"], 10),
        ])
        .unwrap();
        let sched = run_filter(&log, FilterMethod::DirectEntropy { laplace: false });
        let curve = explained_activity_curve(&log, &sched, DiscoveryConfig::default(), Averaging::PerTrace).unwrap();
        assert_eq!(curve.len(), sched.removal_order.len() + 1);
        assert_eq!(curve[0].flower_baseline, 4.0);
        assert_eq!(curve[1].nondeterminism, Some(1.0));
        assert!(curve.iter().all(|r| r.fitness_fraction == 1.0));
        let back = curve_from_csv(&curve_to_csv(&curve)).unwrap();
        assert_eq!(back.len(), curve.len());
        assert_eq!(back[1].nondeterminism, curve[1].nondeterminism);
    }
}
