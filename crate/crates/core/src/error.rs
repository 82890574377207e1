use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty log")]
    EmptyLog,

    #[error("traces must contain at least one event")]
    EmptyTrace,

    #[error("activity name must be non-empty")]
    EmptyActivityName,

    #[error("activity name {0:?} is reserved for the artificial start/end events")]
    ReservedName(String),

    #[error("unknown activity {0}")]
    UnknownActivity(String),

    #[error("XES parse error at line {line}, column {column}: {message}")]
    Xes {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("event {event} of trace {trace} has no concept:name attribute")]
    MissingConceptName { trace: usize, event: usize },

    #[error("CSV column {0:?} not found in header")]
    MissingColumn(String),

    #[error("CSV row {row}: {message}")]
    Csv { row: usize, message: String },

    #[error("variant format line {line}: {message}")]
    VariantFormat { line: usize, message: String },

    #[error("distribution undefined for activity {0}: it does not occur and no smoothing was requested")]
    UndefinedDistribution(String),

    #[error("stale schedule: computed for log {expected}, applied to log {actual}")]
    StaleSchedule { expected: String, actual: String },

    #[error("steps {steps} out of range, schedule has {available} removals")]
    StepsOutOfRange { steps: usize, available: usize },

    #[error("process tree syntax error at offset {offset}: {message}")]
    TreeSyntax { offset: usize, message: String },

    #[error("invalid process tree: {0}")]
    InvalidTree(String),

    #[error("every play-out of the tree was empty after {0} attempts")]
    EmptyLanguage(usize),

    #[error("ground truth set is empty")]
    EmptyGroundTruth,

    #[error("chaos spec: {0}")]
    InvalidChaosSpec(String),

    #[error("rank matrix has missing cells: {0:?}")]
    MissingCells(Vec<(String, String)>),

    #[error("rank matrix is not rectangular")]
    RaggedMatrix,

    #[error("rankings must cover the same items with at least two entries: {0}")]
    RankingMismatch(String),

    #[error("rank correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("unknown filter method {0:?}")]
    UnknownMethod(String),

    #[error("invalid filter method: {0}")]
    InvalidMethod(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
