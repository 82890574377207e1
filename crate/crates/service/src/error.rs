use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = ServiceError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Core(#[from] chaosfilter::Error),

    #[error("unknown session {0}")]
    UnknownSession(String),

    #[error("{field}: {message}")]
    InvalidField { field: String, message: String },

    #[error("fewer than 2 activities enabled")]
    TooFewActivities,

    #[error("log has {found} activities, the limit is {limit}; project the log onto fewer activities before uploading")]
    AlphabetTooLarge { found: usize, limit: usize },

    #[error("unsupported content type {0:?}; send XES (application/xml), CSV (text/csv) or variants (text/plain)")]
    UnsupportedMediaType(String),

    #[error("upload exceeds the limit of {limit} bytes")]
    PayloadTooLarge { limit: usize },

    #[error("session document version {found} is not supported (expected {expected})")]
    UnsupportedVersion { found: u32, expected: u32 },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: malformed session document: {source}", path.display())]
    Document {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("background task failed: {0}")]
    Task(String),
}

impl ServiceError {
    pub fn field(field: impl Into<String>, message: impl ToString) -> Self {
        ServiceError::InvalidField {
            field: field.into(),
            message: message.to_string(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ServiceError::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable snake_case tag used in error documents and CLI error lines.
    pub fn kind(&self) -> &'static str {
        use chaosfilter::Error as E;
        match self {
            ServiceError::Core(e) => match e {
                E::Xes { .. } | E::MissingConceptName { .. } => "xes",
                E::Csv { .. } | E::MissingColumn(_) => "csv",
                E::VariantFormat { .. } => "variant_format",
                E::EmptyLog | E::EmptyTrace => "empty_log",
                E::EmptyActivityName | E::ReservedName(_) => "activity_name",
                E::UnknownActivity(_) => "unknown_activity",
                E::UnknownMethod(_) | E::InvalidMethod(_) => "method",
                E::StaleSchedule { .. } => "stale_schedule",
                E::StepsOutOfRange { .. } => "steps_out_of_range",
                E::TreeSyntax { .. } | E::InvalidTree(_) => "tree",
                E::EmptyLanguage(_) => "empty_language",
                E::InvalidChaosSpec(_) | E::EmptyGroundTruth => "chaos_spec",
                E::MissingCells(_) | E::RaggedMatrix => "rank_matrix",
                E::RankingMismatch(_) | E::UndefinedCorrelation(_) => "ranking",
                E::UndefinedDistribution(_) => "distribution",
                E::Io(_) => "io",
            },
            ServiceError::UnknownSession(_) => "unknown_session",
            ServiceError::InvalidField { .. } => "invalid_field",
            ServiceError::TooFewActivities => "too_few_activities",
            ServiceError::AlphabetTooLarge { .. } => "alphabet_too_large",
            ServiceError::UnsupportedMediaType(_) => "unsupported_media_type",
            ServiceError::PayloadTooLarge { .. } => "payload_too_large",
            ServiceError::UnsupportedVersion { .. } => "unsupported_version",
            ServiceError::Io { .. } => "io",
            ServiceError::Document { .. } => "document",
            ServiceError::Task(_) => "task",
        }
    }

    /// Offending input field, when the error is about one.
    pub fn field_name(&self) -> Option<&str> {
        match self {
            ServiceError::InvalidField { field, .. } => Some(field),
            _ => None,
        }
    }
}
