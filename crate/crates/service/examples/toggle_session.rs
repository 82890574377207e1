//! The interactive workflow against the HTTP API, driven in-process:
//! upload a log, read the ranking, switch off the top activity and
//! rediscover.
//!
//! cargo run -p chaosfilter-service --example toggle_session

use std::sync::Arc;

use axum::body::Body;
use axum::http::Request;
use chaosfilter_service::{router, AppState, SessionStore};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &axum::Router, method: &str, uri: &str, content_type: &str, body: String) -> Value {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", content_type)
        .body(Body::from(body))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    serde_json::from_slice(&bytes).unwrap_or(Value::Null)
}

#[tokio::main]
async fn main() {
    let app = router(Arc::new(AppState::new(SessionStore::in_memory(), 1 << 20, 512)));
    let log = "10×a,b,c,x\n10×a,b,x,c\n10×a,x,b,c\n".to_string();

    let created = call(&app, "POST", "/logs", "text/plain", log).await;
    let id = created["session_id"].as_str().unwrap().to_string();
    println!("session {id}: {}", created["frequencies"]);

    let ranking = call(&app, "GET", &format!("/sessions/{id}/ranking?method=direct-entropy"), "", String::new()).await;
    println!("\n{:<4} {:<8} {:>9} {:>9}", "rank", "activity", "entropy", "frequency");
    for row in ranking["rows"].as_array().unwrap() {
        println!("{:<4} {:<8} {:>9.3} {:>9}", row["rank"], row["activity"].as_str().unwrap(), row["entropy"].as_f64().unwrap(), row["frequency"]);
    }

    let before = call(&app, "POST", &format!("/sessions/{id}/discover"), "application/json", String::new()).await;
    println!("\nall activities: {}  nondeterminism {}", before["process_tree_text"], before["nondeterminism"]);

    let top = ranking["rows"][0]["activity"].clone();
    let toggled = call(&app, "PUT", &format!("/sessions/{id}/toggles"), "application/json", json!({ "disabled": [top] }).to_string()).await;
    let after = call(&app, "POST", &format!("/sessions/{id}/discover"), "application/json", String::new()).await;
    println!(
        "without {top}:   {}  nondeterminism {}  (explained ratio {})",
        after["process_tree_text"], after["nondeterminism"], toggled["explained_ratio"]
    );
}
