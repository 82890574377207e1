//! Operations shared by the HTTP API and the command line, so both produce
//! identical documents for identical inputs.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chaosfilter::discovery::{build_dfg, DfgDocument};
use chaosfilter::entropy::{EntropyReport, Smoothing};
use chaosfilter::eventlog::csv::{self as csvlog, CsvColumns};
use chaosfilter::eventlog::{text, xes};
use chaosfilter::evaluation::{replay_nondeterminism, Averaging};
use chaosfilter::{discover, DiscoveryConfig, EventLog, FilterMethod, FilterSchedule, ProcessTree};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum LogFormat {
    Xes,
    Csv,
    /// One `count×a,b,c` line per variant.
    Variants,
}

impl LogFormat {
    /// Guesses from the file extension; unknown extensions are read as
    /// variants.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("xes") | Some("xml") => LogFormat::Xes,
            Some("csv") => LogFormat::Csv,
            _ => LogFormat::Variants,
        }
    }

    pub fn from_content_type(content_type: &str) -> Option<Self> {
        let essence = content_type.split(';').next().unwrap_or("").trim().to_ascii_lowercase();
        match essence.as_str() {
            "application/xml" | "text/xml" | "application/x-xes+xml" | "application/xes+xml" => Some(LogFormat::Xes),
            "text/csv" => Some(LogFormat::Csv),
            "text/plain" => Some(LogFormat::Variants),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReadOptions {
    pub format: LogFormat,
    pub columns: CsvColumns,
    /// XES only: skip events without a name.
    pub lenient: bool,
}

impl ReadOptions {
    pub fn new(format: LogFormat) -> Self {
        Self {
            format,
            columns: CsvColumns::default(),
            lenient: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub log: EventLog,
    pub dropped_traces: u64,
    pub skipped_events: u64,
}

pub fn read_log(bytes: &[u8], options: &ReadOptions) -> Result<Ingested> {
    let (log, dropped_traces, skipped_events) = match options.format {
        LogFormat::Xes => {
            let opts = xes::XesOptions {
                lenient: options.lenient,
                ..Default::default()
            };
            let import = xes::parse_bytes(bytes, opts)?;
            (import.log, import.dropped_traces, import.skipped_events)
        }
        LogFormat::Csv => (csvlog::read(bytes, &options.columns)?, 0, 0),
        LogFormat::Variants => {
            let s = std::str::from_utf8(bytes).map_err(|e| ServiceError::field("body", e))?;
            (text::parse(s)?, 0, 0)
        }
    };
    if log.is_empty() {
        return Err(chaosfilter::Error::EmptyLog.into());
    }
    Ok(Ingested {
        log,
        dropped_traces,
        skipped_events,
    })
}

pub fn write_log(log: &EventLog, format: LogFormat) -> Result<String> {
    match format {
        LogFormat::Xes => Ok(xes::to_string(log)),
        LogFormat::Variants => Ok(text::to_string(log)),
        LogFormat::Csv => {
            let mut w = ::csv::Writer::from_writer(Vec::new());
            let csv_err = |e: ::csv::Error| ServiceError::field("output", e);
            w.write_record(["case", "activity", "position"]).map_err(csv_err)?;
            let mut case = 0u64;
            for (trace, count) in log.canonical_variants() {
                for _ in 0..count {
                    case += 1;
                    for (i, a) in trace.iter().enumerate() {
                        w.write_record([case.to_string().as_str(), a, (i + 1).to_string().as_str()])
                            .map_err(csv_err)?;
                    }
                }
            }
            let bytes = w.into_inner().map_err(|e| ServiceError::field("output", e.error()))?;
            Ok(String::from_utf8(bytes).expect("written from UTF-8 names"))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogSummary {
    pub digest: String,
    pub traces: u64,
    pub variants: usize,
    pub events: u64,
    pub alphabet: Vec<String>,
    pub frequencies: BTreeMap<String, u64>,
}

impl LogSummary {
    pub fn of(log: &EventLog) -> Self {
        Self {
            digest: log.digest(),
            traces: log.num_traces(),
            variants: log.num_variants(),
            events: log.num_events(),
            alphabet: log.activity_names().into_iter().map(String::from).collect(),
            frequencies: log.frequencies(),
        }
    }
}

/// One activity of a ranking, with the columns an analyst sorts by.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingRow {
    /// 1-based position in the removal order; retained activities follow
    /// the removed ones.
    pub rank: usize,
    pub activity: String,
    /// Value the method ranked by at the step this activity was picked.
    pub criterion: f64,
    pub retained: bool,
    pub frequency: u64,
    /// Unsmoothed entropy on the full log.
    pub entropy: f64,
    /// Entropy on the full log with smoothing weight 1/|A|.
    pub entropy_laplace: f64,
    pub enabled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub method: String,
    pub source_digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
    pub rows: Vec<RankingRow>,
}

pub fn ranking(log: &EventLog, schedule: &FilterSchedule, disabled: &BTreeSet<String>) -> Ranking {
    let freq = log.frequencies();
    let plain = EntropyReport::for_log(log, Smoothing::None);
    let smoothed = EntropyReport::for_log(log, Smoothing::Adaptive);
    let entropy = |report: &EntropyReport, a: &str| report.get(a).map_or(0.0, |r| r.h_total);
    let steps = schedule
        .removal_order
        .iter()
        .map(|s| (s, false))
        .chain(schedule.retained.iter().map(|s| (s, true)));
    let rows = steps
        .enumerate()
        .map(|(i, (step, retained))| RankingRow {
            rank: i + 1,
            activity: step.activity.clone(),
            criterion: step.criterion,
            retained,
            frequency: freq.get(&step.activity).copied().unwrap_or(0),
            entropy: entropy(&plain, &step.activity),
            entropy_laplace: entropy(&smoothed, &step.activity),
            enabled: !disabled.contains(&step.activity),
        })
        .collect();
    Ranking {
        method: schedule.method.to_string(),
        source_digest: schedule.source_digest.clone(),
        diagnostic: schedule.diagnostic.clone(),
        rows,
    }
}

/// Parses `method`, `laplace` and `seed` the way both front ends accept
/// them: `direct-entropy+laplace` and `random:7` work without the flags.
pub fn parse_method(method: Option<&str>, laplace: Option<bool>, seed: Option<u64>) -> Result<FilterMethod> {
    let name = method.unwrap_or("direct-entropy");
    let parsed = if laplace.is_none() && seed.is_none() {
        name.parse()
    } else {
        FilterMethod::from_parts(name, laplace.unwrap_or(false), seed)
    };
    parsed.map_err(|e| ServiceError::field("method", e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscoveryResult {
    pub process_tree: ProcessTree,
    pub process_tree_text: String,
    pub dfg: DfgDocument,
    /// `None` when no trace fits the model.
    pub nondeterminism: Option<f64>,
    pub fitness_fraction: f64,
    pub flower_baseline: f64,
    pub activities: Vec<String>,
}

pub fn discover_model(log: &EventLog, config: DiscoveryConfig, averaging: Averaging) -> DiscoveryResult {
    let tree = discover(log, config);
    let outcome = replay_nondeterminism(&tree, log, averaging);
    let activities: Vec<String> = log.activity_names().into_iter().map(String::from).collect();
    DiscoveryResult {
        process_tree_text: tree.to_string(),
        process_tree: tree,
        dfg: build_dfg(log).to_document(),
        nondeterminism: outcome.nondeterminism,
        fitness_fraction: outcome.fitness_fraction,
        flower_baseline: activities.len() as f64,
        activities,
    }
}

pub fn discovery_config(edge_filter_ratio: f64) -> Result<DiscoveryConfig> {
    if !(0.0..1.0).contains(&edge_filter_ratio) {
        return Err(ServiceError::field(
            "edge_filter_ratio",
            format!("must be in [0, 1), got {edge_filter_ratio}"),
        ));
    }
    Ok(DiscoveryConfig::filtered(edge_filter_ratio))
}
