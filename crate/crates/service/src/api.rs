//! HTTP+JSON API over a [`SessionStore`].
//!
//! | method | path | body | response |
//! |---|---|---|---|
//! | POST | `/logs` | XES, CSV or variant text | [`UploadResponse`] (201) |
//! | GET | `/sessions/{id}` | | [`SessionView`] |
//! | DELETE | `/sessions/{id}` | | 204 |
//! | GET | `/sessions/{id}/ranking` | | [`RankingResponse`] |
//! | PUT | `/sessions/{id}/toggles` | [`TogglesRequest`] | [`TogglesResponse`] |
//! | POST | `/sessions/{id}/discover` | [`DiscoverRequest`] or empty | [`DiscoverResponse`] |
//! | GET | `/sessions/{id}/curve` | | [`CurveResponse`] |
//!
//! `ranking` and `curve` take `method`, `laplace` and `seed` query
//! parameters. With `async=true` they answer `202 {"status": "pending"}`
//! while the computation runs; polling the same URL returns the result once
//! it is ready. Errors are `{"error": {"kind", "message", "field"?}}`.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, MutexGuard};

use axum::body::Bytes;
use axum::extract::rejection::{BytesRejection, QueryRejection};
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use chaosfilter::evaluation::{explained_activity_curve, Averaging, QualityRecord};
use chaosfilter::eventlog::csv::CsvColumns;
use chaosfilter::{run_filter, DiscoveryConfig, FilterMethod, FilterSchedule};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};
use crate::ops::{self, DiscoveryResult, LogFormat, LogSummary, Ranking, ReadOptions};
use crate::session::{lock, SessionStore};

pub const DEFAULT_PORT: u16 = 8080;
pub const DEFAULT_UPLOAD_LIMIT: usize = 64 * 1024 * 1024;
pub const DEFAULT_MAX_ACTIVITIES: usize = 512;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub addr: SocketAddr,
    /// Sessions live only in memory when `None`.
    pub store: Option<PathBuf>,
    pub upload_limit: usize,
    pub max_activities: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            addr: SocketAddr::from(([127, 0, 0, 1], DEFAULT_PORT)),
            store: None,
            upload_limit: DEFAULT_UPLOAD_LIMIT,
            max_activities: DEFAULT_MAX_ACTIVITIES,
        }
    }
}

pub struct AppState {
    store: SessionStore,
    upload_limit: usize,
    max_activities: usize,
    jobs: Mutex<Jobs>,
    curves: Mutex<HashMap<String, Arc<Vec<QualityRecord>>>>,
}

#[derive(Default)]
struct Jobs {
    running: HashSet<String>,
    failed: HashMap<String, ServiceError>,
}

impl AppState {
    pub fn new(store: SessionStore, upload_limit: usize, max_activities: usize) -> Self {
        Self {
            store,
            upload_limit,
            max_activities,
            jobs: Mutex::default(),
            curves: Mutex::default(),
        }
    }

    pub fn store(&self) -> &SessionStore {
        &self.store
    }

    fn jobs(&self) -> MutexGuard<'_, Jobs> {
        self.jobs.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn curves(&self) -> MutexGuard<'_, HashMap<String, Arc<Vec<QualityRecord>>>> {
        self.curves.lock().unwrap_or_else(|e| e.into_inner())
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    let limit = state.upload_limit;
    Router::new()
        .route("/logs", post(upload))
        .route("/sessions/{id}", get(session_view).delete(delete_session))
        .route("/sessions/{id}/ranking", get(ranking))
        .route("/sessions/{id}/toggles", put(toggles))
        .route("/sessions/{id}/discover", post(discover))
        .route("/sessions/{id}/curve", get(curve))
        .layer(DefaultBodyLimit::max(limit))
        .with_state(state)
}

/// Binds `config.addr` and serves until Ctrl-C.
pub async fn serve(config: ServiceConfig) -> Result<()> {
    let store = match &config.store {
        Some(dir) => SessionStore::open(dir)?,
        None => SessionStore::in_memory(),
    };
    let state = Arc::new(AppState::new(store, config.upload_limit, config.max_activities));
    let listener = tokio::net::TcpListener::bind(config.addr)
        .await
        .map_err(|e| ServiceError::field("addr", format!("cannot bind {}: {e}", config.addr)))?;
    tracing::info!(addr = %config.addr, store = ?config.store, "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| ServiceError::Task(e.to_string()))
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        use chaosfilter::Error as E;
        let status = match &self {
            ServiceError::UnknownSession(_) => StatusCode::NOT_FOUND,
            ServiceError::TooFewActivities | ServiceError::AlphabetTooLarge { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::UnsupportedMediaType(_) => StatusCode::UNSUPPORTED_MEDIA_TYPE,
            ServiceError::PayloadTooLarge { .. } => StatusCode::PAYLOAD_TOO_LARGE,
            ServiceError::InvalidField { .. } => StatusCode::BAD_REQUEST,
            ServiceError::Core(E::Io(_)) => StatusCode::INTERNAL_SERVER_ERROR,
            ServiceError::Core(_) => StatusCode::BAD_REQUEST,
            ServiceError::UnsupportedVersion { .. }
            | ServiceError::Io { .. }
            | ServiceError::Document { .. }
            | ServiceError::Task(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        if status.is_server_error() {
            tracing::error!(error = %self, "request failed");
        }
        let mut body = serde_json::json!({ "kind": self.kind(), "message": self.to_string() });
        if let Some(field) = self.field_name() {
            body["field"] = field.into();
        }
        (status, Json(serde_json::json!({ "error": body }))).into_response()
    }
}

fn parse_body<T: DeserializeOwned>(body: &[u8]) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_slice(body);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let field = if path == "." { "body".to_string() } else { path };
        ServiceError::field(field, e.into_inner())
    })
}

fn body_bytes(body: std::result::Result<Bytes, BytesRejection>, limit: usize) -> Result<Bytes> {
    body.map_err(|e| {
        if e.status() == StatusCode::PAYLOAD_TOO_LARGE {
            ServiceError::PayloadTooLarge { limit }
        } else {
            ServiceError::field("body", e.body_text())
        }
    })
}

fn query<T>(q: std::result::Result<Query<T>, QueryRejection>) -> Result<T> {
    q.map(|Query(t)| t).map_err(|e| ServiceError::field("query", e.body_text()))
}

async fn blocking<T, F>(f: F) -> Result<T>
where
    F: FnOnce() -> Result<T> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ServiceError::Task(e.to_string()))?
}

#[derive(Debug, Deserialize)]
pub struct UploadParams {
    pub case: Option<String>,
    pub activity: Option<String>,
    /// CSV column ordering events inside a case.
    pub order: Option<String>,
    #[serde(default)]
    pub lenient: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct UploadResponse {
    pub session_id: String,
    #[serde(flatten)]
    pub summary: LogSummary,
    pub dropped_traces: u64,
    pub skipped_events: u64,
}

async fn upload(
    State(state): State<Arc<AppState>>,
    params: std::result::Result<Query<UploadParams>, QueryRejection>,
    headers: HeaderMap,
    body: std::result::Result<Bytes, BytesRejection>,
) -> Result<(StatusCode, Json<UploadResponse>)> {
    let params = query(params)?;
    let body = body_bytes(body, state.upload_limit)?;
    let content_type = headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .unwrap_or("");
    let format =
        LogFormat::from_content_type(content_type).ok_or_else(|| ServiceError::UnsupportedMediaType(content_type.into()))?;
    let mut options = ReadOptions::new(format);
    options.lenient = params.lenient;
    options.columns = CsvColumns::new(
        params.case.unwrap_or_else(|| "case".into()),
        params.activity.unwrap_or_else(|| "activity".into()),
    );
    options.columns.order = params.order;
    let ingested = blocking(move || ops::read_log(&body, &options)).await?;
    let found = ingested.log.activities().len();
    if found > state.max_activities {
        return Err(ServiceError::AlphabetTooLarge {
            found,
            limit: state.max_activities,
        });
    }
    let summary = LogSummary::of(&ingested.log);
    let session = state.store.create(ingested.log)?;
    let session_id = lock(&session).id.clone();
    tracing::info!(session = %session_id, traces = summary.traces, activities = found, "session created");
    Ok((
        StatusCode::CREATED,
        Json(UploadResponse {
            session_id,
            summary,
            dropped_traces: ingested.dropped_traces,
            skipped_events: ingested.skipped_events,
        }),
    ))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    pub created_at: u64,
    pub updated_at: u64,
    #[serde(flatten)]
    pub summary: LogSummary,
    pub disabled: BTreeSet<String>,
    pub enabled: Vec<String>,
    pub explained_ratio: f64,
    pub discovery: DiscoveryConfig,
    pub cached_schedules: Vec<String>,
}

async fn session_view(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<SessionView>> {
    let session = state.store.get(&id)?;
    let s = lock(&session);
    Ok(Json(SessionView {
        id: s.id.clone(),
        created_at: s.created_at,
        updated_at: s.updated_at,
        summary: LogSummary::of(&s.log),
        disabled: s.disabled.clone(),
        enabled: s.enabled(),
        explained_ratio: s.explained_ratio(),
        discovery: s.discovery,
        cached_schedules: s.schedules.keys().cloned().collect(),
    }))
}

async fn delete_session(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<StatusCode> {
    state.store.delete(&id)?;
    let prefix = format!("{id}|");
    state.curves().retain(|k, _| !k.starts_with(&prefix));
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Debug, Default, Deserialize)]
pub struct MethodParams {
    pub method: Option<String>,
    pub laplace: Option<bool>,
    pub seed: Option<u64>,
    #[serde(default, rename = "async")]
    pub run_async: bool,
    /// `per-trace` (default) or `pooled`; curve only.
    pub averaging: Option<Averaging>,
}

impl MethodParams {
    fn method(&self) -> Result<FilterMethod> {
        ops::parse_method(self.method.as_deref(), self.laplace, self.seed)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Polled<T> {
    Pending,
    Done(T),
}

impl<T: Serialize> IntoResponse for Polled<T> {
    fn into_response(self) -> Response {
        let status = match self {
            Polled::Pending => StatusCode::ACCEPTED,
            Polled::Done(_) => StatusCode::OK,
        };
        (status, Json(self)).into_response()
    }
}

/// Runs `compute` unless `cached` already has the answer. With `run_async`
/// the computation is detached and `None` is returned while it runs; a
/// failure is reported to the next poll.
async fn cached_or_compute<T, C, F>(state: &Arc<AppState>, key: String, run_async: bool, cached: C, compute: F) -> Result<Option<T>>
where
    T: Send + 'static,
    C: Fn() -> Result<Option<T>>,
    F: FnOnce() -> Result<T> + Send + 'static,
{
    if let Some(hit) = cached()? {
        return Ok(Some(hit));
    }
    if !run_async {
        return blocking(compute).await.map(Some);
    }
    {
        let mut jobs = state.jobs();
        if let Some(err) = jobs.failed.remove(&key) {
            return Err(err);
        }
        if !jobs.running.insert(key.clone()) {
            return Ok(None);
        }
    }
    // a job may have finished between the cache check and the insert
    if let Some(hit) = cached()? {
        state.jobs().running.remove(&key);
        return Ok(Some(hit));
    }
    let state = state.clone();
    tokio::spawn(async move {
        let outcome = blocking(compute).await;
        let mut jobs = state.jobs();
        jobs.running.remove(&key);
        if let Err(e) = outcome {
            jobs.failed.insert(key, e);
        }
    });
    Ok(None)
}

/// The session's schedule for `method`, computed off the request path and
/// cached in the session when missing.
async fn schedule(state: &Arc<AppState>, id: &str, method: FilterMethod, run_async: bool) -> Result<Option<Arc<FilterSchedule>>> {
    let session = state.store.get(id)?;
    let key = format!("{id}|schedule|{method}");
    let lookup = {
        let session = session.clone();
        move || Ok(lock(&session).schedules.get(&method.to_string()).cloned())
    };
    let compute = {
        let state = state.clone();
        let session = session.clone();
        let log = lock(&session).log.clone();
        move || {
            let schedule = Arc::new(run_filter(&log, method));
            let mut s = lock(&session);
            if s.cache_schedule(schedule.clone()) {
                state.store.persist(&s)?;
            }
            Ok(schedule)
        }
    };
    cached_or_compute(state, key, run_async, lookup, compute).await
}

pub type RankingResponse = Polled<Ranking>;

async fn ranking(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    params: std::result::Result<Query<MethodParams>, QueryRejection>,
) -> Result<Polled<Ranking>> {
    let params = query(params)?;
    let method = params.method()?;
    let Some(schedule) = schedule(&state, &id, method, params.run_async).await? else {
        return Ok(Polled::Pending);
    };
    let session = state.store.get(&id)?;
    let (log, disabled) = {
        let s = lock(&session);
        (s.log.clone(), s.disabled.clone())
    };
    let ranking = blocking(move || Ok(ops::ranking(&log, &schedule, &disabled))).await?;
    Ok(Polled::Done(ranking))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TogglesRequest {
    pub disabled: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TogglesResponse {
    pub session_id: String,
    pub disabled: BTreeSet<String>,
    pub enabled: Vec<String>,
    pub explained_ratio: f64,
}

async fn toggles(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: std::result::Result<Bytes, BytesRejection>,
) -> Result<Json<TogglesResponse>> {
    let request: TogglesRequest = parse_body(&body_bytes(body, state.upload_limit)?)?;
    let session = state.store.get(&id)?;
    let mut s = lock(&session);
    s.set_disabled(request.disabled)?;
    state.store.persist(&s)?;
    Ok(Json(TogglesResponse {
        session_id: s.id.clone(),
        disabled: s.disabled.clone(),
        enabled: s.enabled(),
        explained_ratio: s.explained_ratio(),
    }))
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscoverRequest {
    /// Replaces the session's stored value when given.
    pub edge_filter_ratio: Option<f64>,
    #[serde(default)]
    pub averaging: Averaging,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DiscoverResponse {
    pub session_id: String,
    pub edge_filter_ratio: f64,
    pub averaging: Averaging,
    #[serde(flatten)]
    pub result: DiscoveryResult,
}

async fn discover(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: std::result::Result<Bytes, BytesRejection>,
) -> Result<Json<DiscoverResponse>> {
    let body = body_bytes(body, state.upload_limit)?;
    let request: DiscoverRequest = if body.iter().all(u8::is_ascii_whitespace) {
        DiscoverRequest::default()
    } else {
        parse_body(&body)?
    };
    let session = state.store.get(&id)?;
    let (log, config) = {
        let mut s = lock(&session);
        if let Some(ratio) = request.edge_filter_ratio {
            let config = ops::discovery_config(ratio)?;
            if config != s.discovery {
                s.discovery = config;
                s.touch();
                state.store.persist(&s)?;
            }
        }
        (s.enabled_log()?, s.discovery)
    };
    let averaging = request.averaging;
    let result = blocking(move || Ok(ops::discover_model(&log, config, averaging))).await?;
    Ok(Json(DiscoverResponse {
        session_id: id,
        edge_filter_ratio: config.edge_filter_ratio,
        averaging,
        result,
    }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Curve {
    pub method: String,
    pub edge_filter_ratio: f64,
    pub averaging: Averaging,
    pub records: Vec<QualityRecord>,
}

pub type CurveResponse = Polled<Curve>;

async fn curve(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    params: std::result::Result<Query<MethodParams>, QueryRejection>,
) -> Result<Polled<Curve>> {
    let params = query(params)?;
    let method = params.method()?;
    let averaging = params.averaging.unwrap_or_default();
    let session = state.store.get(&id)?;
    let (log, config, cached_schedule) = {
        let s = lock(&session);
        (s.log.clone(), s.discovery, s.schedules.get(&method.to_string()).cloned())
    };
    let key = format!("{id}|curve|{method}|{}|{averaging:?}", config.edge_filter_ratio);
    let lookup = {
        let state = state.clone();
        let key = key.clone();
        move || Ok(state.curves().get(&key).cloned())
    };
    let compute = {
        let state = state.clone();
        let key = key.clone();
        move || {
            let schedule = match cached_schedule {
                Some(s) => s,
                None => {
                    let schedule = Arc::new(run_filter(&log, method));
                    let mut s = lock(&session);
                    if s.cache_schedule(schedule.clone()) {
                        state.store.persist(&s)?;
                    }
                    schedule
                }
            };
            let records = Arc::new(explained_activity_curve(&log, &schedule, config, averaging)?);
            state.curves().insert(key, records.clone());
            Ok(records)
        }
    };
    let Some(records) = cached_or_compute(&state, key, params.run_async, lookup, compute).await? else {
        return Ok(Polled::Pending);
    };
    Ok(Polled::Done(Curve {
        method: method.to_string(),
        edge_filter_ratio: config.edge_filter_ratio,
        averaging,
        records: (*records).clone(),
    }))
}
