//! The `chaosfilter` command line.
//!
//! Errors go to stderr as one JSON line `{"error":{"kind":..,"message":..}}`
//! with exit status 1. Usage errors print usage text and exit with 2.

use std::ffi::OsString;
use std::fs;
use std::io::{IsTerminal, Read, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chaosfilter::evaluation::{
    curve_from_csv, curve_to_csv, explained_activity_curve, kendall_tau_b, ranks_from_order, value_at_threshold,
    winning_number, Averaging, RankMatrix,
};
use chaosfilter::eventlog::csv::CsvColumns;
use chaosfilter::synthesis::{
    bundled, chaos_table_csv, evaluate_chaos, inject_chaos, random_tree, simulate, ChaosInsertionSpec, ChaosMode,
    DEFAULT_LOOP_CONTINUE,
};
use chaosfilter::{materialize, run_filter, EventLog, FilterMethod, FilterSchedule, ProcessTree};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::api::{self, ServiceConfig};
use crate::error::{Result, ServiceError};
use crate::ops::{self, LogFormat, LogSummary, ReadOptions};

#[derive(Debug, Parser)]
#[command(name = "chaosfilter", version, about = "Detect and remove chaotic activities from event logs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read a log and print its summary, or convert it.
    Ingest {
        #[command(flatten)]
        input: InputArgs,
        /// Output format; prints a JSON summary when omitted.
        #[arg(long)]
        to: Option<LogFormat>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Print the removal schedule of a filter method.
    Rank {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        method: MethodArgs,
        #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
        format: TableFormat,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Write the log after the first N removals of a schedule.
    Filter {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        method: MethodArgs,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        to: Option<LogFormat>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Simulate a log from a process tree.
    Generate {
        #[command(flatten)]
        tree: TreeArgs,
        #[arg(long, default_value_t = 100)]
        traces: usize,
        #[arg(long)]
        seed: u64,
        /// Probability of taking another loop iteration.
        #[arg(long, default_value_t = DEFAULT_LOOP_CONTINUE)]
        loop_p: f64,
        #[arg(long)]
        to: Option<LogFormat>,
        /// Also write the tree text here.
        #[arg(long)]
        tree_out: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Insert chaotic activities into a log.
    Inject {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        k: usize,
        /// U (uniform), F (frequent) or I (infrequent).
        #[arg(long)]
        mode: ChaosMode,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value = "CHAOS_")]
        prefix: String,
        /// Write the inserted activities and their counts as JSON here.
        #[arg(long)]
        truth_out: Option<PathBuf>,
        #[arg(long)]
        to: Option<LogFormat>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Count incorrectly removed activities over a grid of injections.
    EvaluateChaos {
        /// Log to inject into; the bundled 12-activity log when omitted.
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
        k: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "U,F,I")]
        modes: Vec<ChaosMode>,
        /// `all` or a comma-separated list such as `direct-entropy,lff,random:3`.
        #[arg(long, default_value = "all")]
        methods: String,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Discover a process tree and measure it on the log.
    Discover {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 0.0)]
        edge_filter: f64,
        #[arg(long, value_enum, default_value_t = AveragingArg::PerTrace)]
        averaging: AveragingArg,
        #[arg(long, value_enum, default_value_t = TreeFormat::Text)]
        format: TreeFormat,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Model quality after each removal step of a schedule, as CSV.
    Curve {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        method: MethodArgs,
        #[arg(long, default_value_t = 0.0)]
        edge_filter: f64,
        #[arg(long, value_enum, default_value_t = AveragingArg::PerTrace)]
        averaging: AveragingArg,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Compare methods: Kendall tau-b between schedule files, or winning
    /// numbers over curve files (one file per log).
    Compare {
        /// Schedule JSON files written by `rank --format json`.
        #[arg(long, num_args = 2.., conflicts_with = "curves", required_unless_present = "curves")]
        schedules: Vec<PathBuf>,
        /// Curve CSV files written by `curve`.
        #[arg(long, num_args = 1..)]
        curves: Vec<PathBuf>,
        /// Compare curves at the most filtered point keeping at least this
        /// share of activities.
        #[arg(long, default_value_t = 0.75)]
        min_explained: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = "CHAOSFILTER_BIND", default_value = "127.0.0.1")]
        bind: IpAddr,
        #[arg(long, env = "CHAOSFILTER_PORT", default_value_t = api::DEFAULT_PORT)]
        port: u16,
        /// Directory for session documents; sessions stay in memory when unset.
        #[arg(long, env = "CHAOSFILTER_STORE")]
        store: Option<PathBuf>,
        /// Maximum upload size in bytes.
        #[arg(long, env = "CHAOSFILTER_UPLOAD_LIMIT", default_value_t = api::DEFAULT_UPLOAD_LIMIT)]
        upload_limit: usize,
        #[arg(long, env = "CHAOSFILTER_MAX_ACTIVITIES", default_value_t = api::DEFAULT_MAX_ACTIVITIES)]
        max_activities: usize,
    },
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Log file, or `-` for stdin.
    pub input: PathBuf,
    /// Input format; guessed from the extension when omitted.
    #[arg(long)]
    pub format_in: Option<LogFormat>,
    #[arg(long, default_value = "case")]
    pub case_column: String,
    #[arg(long, default_value = "activity")]
    pub activity_column: String,
    /// Numeric CSV column ordering events inside a case.
    #[arg(long)]
    pub order_column: Option<String>,
    /// Skip XES events without a name instead of failing.
    #[arg(long)]
    pub lenient: bool,
}

impl InputArgs {
    fn read(&self) -> Result<ops::Ingested> {
        let bytes = if self.input.as_os_str() == "-" {
            let mut buf = Vec::new();
            std::io::stdin()
                .read_to_end(&mut buf)
                .map_err(|e| ServiceError::io("<stdin>", e))?;
            buf
        } else {
            fs::read(&self.input).map_err(|e| ServiceError::io(&self.input, e))?
        };
        let format = self.format_in.unwrap_or_else(|| LogFormat::from_path(&self.input));
        let mut options = ReadOptions::new(format);
        options.lenient = self.lenient;
        options.columns = CsvColumns::new(&self.case_column, &self.activity_column);
        options.columns.order = self.order_column.clone();
        ops::read_log(&bytes, &options)
    }

    fn log(&self) -> Result<EventLog> {
        Ok(self.read()?.log)
    }
}

#[derive(Debug, Args)]
pub struct MethodArgs {
    /// direct-entropy, indirect-entropy, least-frequent-first,
    /// most-frequent-first or random.
    #[arg(long, default_value = "direct-entropy")]
    pub method: String,
    #[arg(long)]
    pub laplace: bool,
    /// Required by the random method.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl MethodArgs {
    fn method(&self) -> Result<FilterMethod> {
        ops::parse_method(Some(&self.method), Some(self.laplace), self.seed)
    }
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl OutArgs {
    fn write(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(path) => fs::write(path, text).map_err(|e| ServiceError::io(path, e)),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout
                    .write_all(text.as_bytes())
                    .and_then(|_| stdout.flush())
                    .map_err(|e| ServiceError::io("<stdout>", e))
            }
        }
    }

    /// Explicit format, else the output file's extension, else variants.
    fn log_format(&self, explicit: Option<LogFormat>) -> LogFormat {
        explicit
            .or_else(|| self.out.as_deref().map(LogFormat::from_path))
            .unwrap_or(LogFormat::Variants)
    }

    fn write_log(&self, log: &EventLog, explicit: Option<LogFormat>) -> Result<()> {
        self.write(&ops::write_log(log, self.log_format(explicit))?)
    }

    fn write_json<T: Serialize>(&self, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).expect("serializable output");
        text.push('\n');
        self.write(&text)
    }
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct TreeArgs {
    /// Tree text such as `seq(a, xor(b, c), loop(d, tau))`.
    #[arg(long)]
    pub tree: Option<String>,
    /// One of the bundled trees: a12 or a22.
    #[arg(long)]
    pub bundled: Option<String>,
    /// A random tree over this many activities, drawn with `--seed`.
    #[arg(long)]
    pub random_activities: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TableFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TreeFormat {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AveragingArg {
    PerTrace,
    Pooled,
}

impl From<AveragingArg> for Averaging {
    fn from(a: AveragingArg) -> Self {
        match a {
            AveragingArg::PerTrace => Averaging::PerTrace,
            AveragingArg::Pooled => Averaging::Pooled,
        }
    }
}

/// Parses `std::env::args`, runs the command and maps the outcome to an
/// exit status.
pub fn main() -> ExitCode {
    run_from(std::env::args_os())
}

pub fn run_from<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(u8::try_from(e.exit_code()).unwrap_or(2));
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = serde_json::json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Ingest { input, to, out } => {
            let ingested = input.read()?;
            match to {
                Some(format) => out.write(&ops::write_log(&ingested.log, format)?),
                None => out.write_json(&IngestSummary {
                    summary: LogSummary::of(&ingested.log),
                    dropped_traces: ingested.dropped_traces,
                    skipped_events: ingested.skipped_events,
                }),
            }
        }
        Command::Rank {
            input,
            method,
            format,
            out,
        } => {
            let schedule = run_filter(&input.log()?, method.method()?);
            match format {
                TableFormat::Csv => out.write(&schedule.to_csv()),
                TableFormat::Json => out.write_json(&schedule),
            }
        }
        Command::Filter {
            input,
            method,
            steps,
            to,
            out,
        } => {
            let log = input.log()?;
            let schedule = run_filter(&log, method.method()?);
            out.write_log(&materialize(&log, &schedule, steps)?, to)
        }
        Command::Generate {
            tree,
            traces,
            seed,
            loop_p,
            to,
            tree_out,
            out,
        } => {
            let tree = tree.resolve(seed)?;
            if let Some(path) = tree_out {
                fs::write(&path, format!("{tree}\n")).map_err(|e| ServiceError::io(&path, e))?;
            }
            out.write_log(&simulate(&tree, traces, seed, loop_p)?, to)
        }
        Command::Inject {
            input,
            k,
            mode,
            seed,
            prefix,
            truth_out,
            to,
            out,
        } => {
            let mut spec = ChaosInsertionSpec::new(k, mode, seed);
            spec.name_prefix = prefix;
            let injection = inject_chaos(&input.log()?, &spec)?;
            if let Some(path) = truth_out {
                let mut text = serde_json::to_string_pretty(&injection.inserted).expect("map of counts");
                text.push('\n');
                fs::write(&path, text).map_err(|e| ServiceError::io(&path, e))?;
            }
            out.write_log(&injection.log, to)
        }
        Command::EvaluateChaos {
            log,
            k,
            modes,
            methods,
            seed,
            out,
        } => {
            let log = match log {
                Some(path) => InputArgs::for_path(path).log()?,
                None => simulate(&bundled::a12(), bundled::A12_TRACES, bundled::A12_SEED, DEFAULT_LOOP_CONTINUE)?,
            };
            let methods = parse_methods(&methods, seed)?;
            let cells = evaluate_chaos(&log, &k, &modes, &methods, seed)?;
            out.write(&chaos_table_csv(&cells))
        }
        Command::Discover {
            input,
            edge_filter,
            averaging,
            format,
            out,
        } => {
            let config = ops::discovery_config(edge_filter)?;
            let result = ops::discover_model(&input.log()?, config, averaging.into());
            match format {
                TreeFormat::Json => out.write_json(&result),
                TreeFormat::Text => {
                    let nd = result.nondeterminism.map_or("undefined".to_string(), |v| format!("{v:.6}"));
                    out.write(&format!(
                        "{}\nnondeterminism: {nd}\nfitness_fraction: {:.6}\nflower_baseline: {}\n",
                        result.process_tree_text, result.fitness_fraction, result.flower_baseline
                    ))
                }
            }
        }
        Command::Curve {
            input,
            method,
            edge_filter,
            averaging,
            out,
        } => {
            let log = input.log()?;
            let schedule = run_filter(&log, method.method()?);
            let config = ops::discovery_config(edge_filter)?;
            let records = explained_activity_curve(&log, &schedule, config, averaging.into())?;
            out.write(&curve_to_csv(&records))
        }
        Command::Compare {
            schedules,
            curves,
            min_explained,
            out,
        } => {
            if schedules.is_empty() {
                out.write(&compare_curves(&curves, min_explained)?)
            } else {
                out.write(&compare_schedules(&schedules)?)
            }
        }
        Command::Serve {
            bind,
            port,
            store,
            upload_limit,
            max_activities,
        } => {
            let _ = tracing_subscriber::fmt()
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_default_env()
                        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
                )
                .with_writer(std::io::stderr)
                .with_ansi(std::io::stderr().is_terminal())
                .try_init();
            let config = ServiceConfig {
                addr: SocketAddr::new(bind, port),
                store,
                upload_limit,
                max_activities,
            };
            tokio::runtime::Builder::new_multi_thread()
                .enable_all()
                .build()
                .map_err(|e| ServiceError::Task(e.to_string()))?
                .block_on(api::serve(config))
        }
    }
}

#[derive(Serialize)]
struct IngestSummary {
    #[serde(flatten)]
    summary: LogSummary,
    dropped_traces: u64,
    skipped_events: u64,
}

impl InputArgs {
    fn for_path(input: PathBuf) -> Self {
        Self {
            input,
            format_in: None,
            case_column: "case".into(),
            activity_column: "activity".into(),
            order_column: None,
            lenient: false,
        }
    }
}

impl TreeArgs {
    fn resolve(&self, seed: u64) -> Result<ProcessTree> {
        if let Some(text) = &self.tree {
            return Ok(text.parse()?);
        }
        if let Some(name) = &self.bundled {
            return match name.as_str() {
                "a12" => Ok(bundled::a12()),
                "a22" => Ok(bundled::a22()),
                other => Err(ServiceError::field("bundled", format!("unknown tree {other:?}; use a12 or a22"))),
            };
        }
        match self.random_activities {
            Some(n) if n >= 1 => Ok(random_tree(n, seed)),
            _ => Err(ServiceError::field("random-activities", "must be at least 1")),
        }
    }
}

/// `all` expands to the seven standard methods with `seed` for random.
fn parse_methods(list: &str, seed: u64) -> Result<Vec<FilterMethod>> {
    if list.trim() == "all" {
        return Ok(FilterMethod::all(seed));
    }
    list.split(',')
        .map(|m| match m.trim() {
            "random" => Ok(FilterMethod::Random { seed }),
            m => m.parse().map_err(|e| ServiceError::field("methods", e)),
        })
        .collect()
}

fn read_schedule(path: &Path) -> Result<FilterSchedule> {
    let text = fs::read_to_string(path).map_err(|e| ServiceError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| ServiceError::field(path.display().to_string(), e))
}

/// Pairwise tau-b between full rankings, as CSV.
fn compare_schedules(paths: &[PathBuf]) -> Result<String> {
    let schedules: Vec<(String, Vec<String>)> = paths
        .iter()
        .map(|p| Ok((p.display().to_string(), read_schedule(p)?.full_ranking())))
        .collect::<Result<_>>()?;
    let mut w = ::csv::Writer::from_writer(Vec::new());
    let csv_err = |e: ::csv::Error| ServiceError::field("output", e);
    w.write_record(["first", "second", "tau_b", "p_value", "exact", "reject_at_05"])
        .map_err(csv_err)?;
    for (i, (a, ra)) in schedules.iter().enumerate() {
        for (b, rb) in &schedules[i + 1..] {
            let (r1, r2) = ranks_from_order(ra, rb)?;
            let t = kendall_tau_b(&r1, &r2)?;
            w.write_record([
                a.clone(),
                b.clone(),
                t.tau_b.to_string(),
                t.p_value.to_string(),
                t.exact.to_string(),
                t.reject_at_05.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| ServiceError::field("output", e.error()))?).expect("UTF-8"))
}

/// Winning numbers of the methods appearing in every curve file.
fn compare_curves(paths: &[PathBuf], min_explained: f64) -> Result<String> {
    let mut methods: Vec<String> = Vec::new();
    let mut per_log = Vec::new();
    for path in paths {
        let text = fs::read_to_string(path).map_err(|e| ServiceError::io(path, e))?;
        let records = curve_from_csv(&text)?;
        for r in &records {
            if !methods.contains(&r.method) {
                methods.push(r.method.clone());
            }
        }
        per_log.push((path.display().to_string(), records));
    }
    let mut matrix = RankMatrix::new(methods.clone(), per_log.iter().map(|(p, _)| p.clone()).collect());
    for (log, records) in &per_log {
        for m in &methods {
            let curve: Vec<_> = records.iter().filter(|r| &r.method == m).cloned().collect();
            if let Some(v) = value_at_threshold(&curve, min_explained) {
                matrix.set(m, log, v);
            }
        }
    }
    let wins = winning_number(&matrix)?;
    let mut w = ::csv::Writer::from_writer(Vec::new());
    let csv_err = |e: ::csv::Error| ServiceError::field("output", e);
    w.write_record(["method", "wins", "average"]).map_err(csv_err)?;
    for ((m, t), a) in wins.methods.iter().zip(&wins.totals).zip(&wins.averages) {
        w.write_record([m.clone(), t.to_string(), a.to_string()]).map_err(csv_err)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| ServiceError::field("output", e.error()))?).expect("UTF-8"))
}
