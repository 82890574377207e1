//! Sessions of the interactive filtering workflow and their on-disk store.
//!
//! A session owns an immutable base log, the set of activities the analyst
//! has toggled off, and filter schedules computed for it. The store keeps
//! live sessions in memory and mirrors each one to `<dir>/<id>.json`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{SystemTime, UNIX_EPOCH};

use chaosfilter::{DiscoveryConfig, EventLog, FilterSchedule};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct Session {
    pub id: String,
    pub log: Arc<EventLog>,
    pub digest: String,
    pub disabled: BTreeSet<String>,
    pub discovery: DiscoveryConfig,
    /// Keyed by the method's display form.
    pub schedules: BTreeMap<String, Arc<FilterSchedule>>,
    /// Seconds since the Unix epoch.
    pub created_at: u64,
    pub updated_at: u64,
}

impl Session {
    pub fn new(id: impl Into<String>, log: EventLog) -> Self {
        let now = now_secs();
        Self {
            id: id.into(),
            digest: log.digest(),
            log: Arc::new(log),
            disabled: BTreeSet::new(),
            discovery: DiscoveryConfig::default(),
            schedules: BTreeMap::new(),
            created_at: now,
            updated_at: now,
        }
    }

    pub fn alphabet(&self) -> Vec<String> {
        self.log.activity_names().into_iter().map(String::from).collect()
    }

    pub fn enabled(&self) -> Vec<String> {
        self.alphabet()
            .into_iter()
            .filter(|a| !self.disabled.contains(a))
            .collect()
    }

    pub fn explained_ratio(&self) -> f64 {
        let total = self.log.activities().len();
        if total == 0 {
            return 0.0;
        }
        (total - self.disabled.len()) as f64 / total as f64
    }

    /// Replaces the toggled-off set. Every name must belong to the log.
    pub fn set_disabled<I, S>(&mut self, disabled: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let alphabet: BTreeSet<String> = self.alphabet().into_iter().collect();
        let disabled: BTreeSet<String> = disabled.into_iter().map(Into::into).collect();
        if let Some(unknown) = disabled.iter().find(|a| !alphabet.contains(*a)) {
            return Err(ServiceError::field("disabled", format!("unknown activity {unknown:?}")));
        }
        self.disabled = disabled;
        self.touch();
        Ok(())
    }

    /// The base log restricted to enabled activities.
    pub fn enabled_log(&self) -> Result<EventLog> {
        if self.enabled().len() < 2 {
            return Err(ServiceError::TooFewActivities);
        }
        if self.disabled.is_empty() {
            return Ok((*self.log).clone());
        }
        Ok(self.log.without_names(&self.disabled)?)
    }

    /// Stores a schedule unless it was computed for a different log.
    pub fn cache_schedule(&mut self, schedule: Arc<FilterSchedule>) -> bool {
        if schedule.source_digest != self.digest {
            return false;
        }
        self.schedules.insert(schedule.method.to_string(), schedule);
        self.touch();
        true
    }

    pub fn touch(&mut self) {
        self.updated_at = now_secs().max(self.updated_at);
    }

    pub fn to_document(&self) -> SessionDocument {
        SessionDocument {
            version: SCHEMA_VERSION,
            id: self.id.clone(),
            created_at: self.created_at,
            updated_at: self.updated_at,
            log_digest: self.digest.clone(),
            variants: self
                .log
                .canonical_variants()
                .into_iter()
                .map(|(trace, count)| StoredVariant {
                    trace: trace.into_iter().map(String::from).collect(),
                    count,
                })
                .collect(),
            disabled: self.disabled.clone(),
            discovery: self.discovery,
            schedules: self
                .schedules
                .iter()
                .map(|(k, s)| (k.clone(), (**s).clone()))
                .collect(),
        }
    }

    /// Rebuilds a session. Schedules whose digest does not match the stored
    /// log are dropped and their keys returned.
    pub fn from_document(doc: SessionDocument) -> Result<(Session, Vec<String>)> {
        if doc.version != SCHEMA_VERSION {
            return Err(ServiceError::UnsupportedVersion {
                found: doc.version,
                expected: SCHEMA_VERSION,
            });
        }
        let log = EventLog::from_variants(doc.variants.into_iter().map(|v| (v.trace, v.count)))?;
        let digest = log.digest();
        let mut dropped = Vec::new();
        let mut schedules = BTreeMap::new();
        for (key, schedule) in doc.schedules {
            if schedule.source_digest == digest {
                schedules.insert(key, Arc::new(schedule));
            } else {
                dropped.push(key);
            }
        }
        let mut session = Session {
            id: doc.id,
            log: Arc::new(log),
            digest,
            disabled: BTreeSet::new(),
            discovery: doc.discovery,
            schedules,
            created_at: doc.created_at,
            updated_at: doc.updated_at,
        };
        let updated_at = session.updated_at;
        session.set_disabled(doc.disabled)?;
        session.updated_at = updated_at;
        Ok((session, dropped))
    }
}

/// Versioned on-disk form of a [`Session`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionDocument {
    pub version: u32,
    pub id: String,
    pub created_at: u64,
    pub updated_at: u64,
    pub log_digest: String,
    pub variants: Vec<StoredVariant>,
    pub disabled: BTreeSet<String>,
    pub discovery: DiscoveryConfig,
    pub schedules: BTreeMap<String, FilterSchedule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredVariant {
    pub trace: Vec<String>,
    pub count: u64,
}

#[derive(Deserialize)]
struct VersionProbe {
    version: u32,
}

pub fn document_to_json(doc: &SessionDocument) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("session documents serialize");
    s.push('\n');
    s
}

pub fn session_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.json"))
}

/// Writes the session to `<dir>/<id>.json` through a temporary file.
pub fn save(session: &Session, dir: &Path) -> Result<PathBuf> {
    let path = session_path(dir, &session.id);
    let tmp = dir.join(format!(".{}.json.tmp", session.id));
    fs::write(&tmp, document_to_json(&session.to_document())).map_err(|e| ServiceError::io(&tmp, e))?;
    fs::rename(&tmp, &path).map_err(|e| ServiceError::io(&path, e))?;
    Ok(path)
}

/// Reads a session document, checking the schema version before anything
/// else.
pub fn load(path: &Path) -> Result<Session> {
    let text = fs::read_to_string(path).map_err(|e| ServiceError::io(path, e))?;
    let document = |source| ServiceError::Document {
        path: path.to_path_buf(),
        source,
    };
    let probe: VersionProbe = serde_json::from_str(&text).map_err(document)?;
    if probe.version != SCHEMA_VERSION {
        return Err(ServiceError::UnsupportedVersion {
            found: probe.version,
            expected: SCHEMA_VERSION,
        });
    }
    let doc: SessionDocument = serde_json::from_str(&text).map_err(document)?;
    let (session, dropped) = Session::from_document(doc)?;
    for key in dropped {
        tracing::warn!(session = %session.id, schedule = %key, "dropping stale schedule: log digest changed");
    }
    Ok(session)
}

pub type SharedSession = Arc<Mutex<Session>>;

/// Live sessions, loaded from the store directory on first access.
#[derive(Debug, Default)]
pub struct SessionStore {
    dir: Option<PathBuf>,
    live: Mutex<HashMap<String, SharedSession>>,
}

impl SessionStore {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| ServiceError::io(&dir, e))?;
        Ok(Self {
            dir: Some(dir),
            live: Mutex::default(),
        })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn create(&self, log: EventLog) -> Result<SharedSession> {
        let session = Session::new(uuid::Uuid::new_v4().simple().to_string(), log);
        self.persist(&session)?;
        let id = session.id.clone();
        let shared = Arc::new(Mutex::new(session));
        self.live().insert(id, shared.clone());
        Ok(shared)
    }

    pub fn get(&self, id: &str) -> Result<SharedSession> {
        let mut live = self.live();
        if let Some(s) = live.get(id) {
            return Ok(s.clone());
        }
        let path = match &self.dir {
            Some(dir) if valid_id(id) => session_path(dir, id),
            _ => return Err(ServiceError::UnknownSession(id.to_string())),
        };
        if !path.exists() {
            return Err(ServiceError::UnknownSession(id.to_string()));
        }
        let session = load(&path)?;
        let shared = Arc::new(Mutex::new(session));
        live.insert(id.to_string(), shared.clone());
        Ok(shared)
    }

    pub fn persist(&self, session: &Session) -> Result<()> {
        if let Some(dir) = &self.dir {
            save(session, dir)?;
        }
        Ok(())
    }

    pub fn delete(&self, id: &str) -> Result<()> {
        let was_live = self.live().remove(id).is_some();
        let on_disk = match &self.dir {
            Some(dir) if valid_id(id) => {
                let path = session_path(dir, id);
                match fs::remove_file(&path) {
                    Ok(()) => true,
                    Err(e) if e.kind() == std::io::ErrorKind::NotFound => false,
                    Err(e) => return Err(ServiceError::io(path, e)),
                }
            }
            _ => false,
        };
        if was_live || on_disk {
            Ok(())
        } else {
            Err(ServiceError::UnknownSession(id.to_string()))
        }
    }

    fn live(&self) -> MutexGuard<'_, HashMap<String, SharedSession>> {
        self.live.lock().unwrap_or_else(|e| e.into_inner())
    }
}

/// Locks a session, recovering from a poisoned lock.
pub fn lock(session: &SharedSession) -> MutexGuard<'_, Session> {
    session.lock().unwrap_or_else(|e| e.into_inner())
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-')
}

fn now_secs() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}
