use std::sync::Arc;

use chaosfilter::{run_filter, EventLog, FilterMethod};
use chaosfilter_service::session::{self, document_to_json, load, save, Session, SessionStore, SCHEMA_VERSION};
use chaosfilter_service::ServiceError;

fn worked() -> EventLog {
    EventLog::from_variants([
        (vec!["a", "b", "c", "x"], 10),
        (vec!["a", "b", "x", "c"], 10),
        (vec!["a", "x", "b", "c"], 10),
    ])
    .unwrap()
}

fn populated() -> Session {
    let mut s = Session::new("s1", worked());
    s.set_disabled(["x"]).unwrap();
    for m in [FilterMethod::DirectEntropy { laplace: true }, FilterMethod::Random { seed: 9 }] {
        assert!(s.cache_schedule(Arc::new(run_filter(&s.log, m))));
    }
    s
}

#[test]
fn save_load_save_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let path = save(&populated(), dir.path()).unwrap();
    let first = std::fs::read(&path).unwrap();
    let loaded = load(&path).unwrap();
    save(&loaded, dir.path()).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), first);

    assert_eq!(*loaded.log, worked());
    assert_eq!(loaded.disabled, ["x".to_string()].into());
    assert_eq!(loaded.schedules.keys().collect::<Vec<_>>(), ["direct-entropy+laplace", "random:9"]);
}

#[test]
fn unknown_version_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc = populated().to_document();
    doc.version = SCHEMA_VERSION + 1;
    let path = dir.path().join("s1.json");
    std::fs::write(&path, document_to_json(&doc)).unwrap();
    match load(&path) {
        Err(ServiceError::UnsupportedVersion { found, expected }) => {
            assert_eq!((found, expected), (SCHEMA_VERSION + 1, SCHEMA_VERSION));
        }
        other => panic!("{other:?}"),
    }
    // the version is checked before the rest of the document
    std::fs::write(&path, r#"{"version": 99, "something": "else"}"#).unwrap();
    assert!(matches!(load(&path), Err(ServiceError::UnsupportedVersion { found: 99, .. })));
}

#[test]
fn stale_schedules_are_dropped() {
    let mut doc = populated().to_document();
    doc.schedules.get_mut("random:9").unwrap().source_digest = "0".repeat(64);
    let (session, dropped) = Session::from_document(doc).unwrap();
    assert_eq!(dropped, ["random:9"]);
    assert_eq!(session.schedules.keys().collect::<Vec<_>>(), ["direct-entropy+laplace"]);

    let mut s = Session::new("s2", worked());
    let other = EventLog::from_variants([(vec!["a", "b", "c"], 1)]).unwrap();
    assert!(!s.cache_schedule(Arc::new(run_filter(&other, FilterMethod::LeastFrequentFirst))));
    assert!(s.schedules.is_empty());
}

#[test]
fn malformed_documents_name_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\"version\": 1, \"id\": 3}").unwrap();
    let err = load(&path).unwrap_err();
    assert!(matches!(err, ServiceError::Document { .. }));
    assert!(err.to_string().contains("bad.json"));
    let missing = load(&dir.path().join("missing.json")).unwrap_err();
    assert!(missing.to_string().contains("missing.json"));
}

#[test]
fn toggles_validate_and_keep_the_base_log() {
    let mut s = Session::new("s3", worked());
    let digest = s.digest.clone();
    assert!(s.set_disabled(["x", "zz"]).is_err());
    assert!(s.disabled.is_empty());
    s.set_disabled(["x", "a"]).unwrap();
    assert_eq!(s.enabled(), ["b", "c"]);
    assert_eq!(s.explained_ratio(), 0.5);
    assert_eq!(s.enabled_log().unwrap().activity_names(), ["b", "c"]);
    assert_eq!(s.log.digest(), digest);
    s.set_disabled(["x", "a", "b"]).unwrap();
    assert!(matches!(s.enabled_log(), Err(ServiceError::TooFewActivities)));
}

#[test]
fn store_loads_lazily_and_rejects_odd_ids() {
    let dir = tempfile::tempdir().unwrap();
    let id = {
        let store = SessionStore::open(dir.path()).unwrap();
        let s = store.create(worked()).unwrap();
        let id = session::lock(&s).id.clone();
        id
    };
    let store = SessionStore::open(dir.path()).unwrap();
    let s = store.get(&id).unwrap();
    assert_eq!(*session::lock(&s).log, worked());
    for bad in ["", "../x", "a/b", "nope"] {
        assert!(matches!(store.get(bad), Err(ServiceError::UnknownSession(_))), "{bad}");
    }
    store.delete(&id).unwrap();
    assert!(matches!(store.get(&id), Err(ServiceError::UnknownSession(_))));
}
