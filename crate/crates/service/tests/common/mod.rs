#![allow(dead_code)]

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use chaosfilter_service::{router, AppState, SessionStore};
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

pub const WORKED: &str = "10×a,b,c,x\n10×a,b,x,c\n10×a,x,b,c\n";

pub fn fixture(name: &str) -> String {
    format!("{}/../core/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

pub fn app_with(store: SessionStore, upload_limit: usize, max_activities: usize) -> Router {
    router(Arc::new(AppState::new(store, upload_limit, max_activities)))
}

pub fn app() -> Router {
    app_with(SessionStore::in_memory(), 1 << 20, 512)
}

pub async fn send(app: &Router, method: Method, uri: &str, content_type: Option<&str>, body: impl Into<Body>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(ct) = content_type {
        req = req.header("content-type", ct);
    }
    let resp = app.clone().oneshot(req.body(body.into()).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

pub async fn get(app: &Router, uri: &str) -> (StatusCode, Value) {
    send(app, Method::GET, uri, None, Body::empty()).await
}

pub async fn upload(app: &Router, content_type: &str, body: impl Into<Body>) -> String {
    let (status, v) = send(app, Method::POST, "/logs", Some(content_type), body).await;
    assert_eq!(status, StatusCode::CREATED, "{v}");
    v["session_id"].as_str().unwrap().to_string()
}

pub async fn put_toggles(app: &Router, id: &str, disabled: &[&str]) -> (StatusCode, Value) {
    let body = serde_json::json!({ "disabled": disabled }).to_string();
    send(app, Method::PUT, &format!("/sessions/{id}/toggles"), Some("application/json"), body).await
}

pub async fn discover(app: &Router, id: &str, body: &str) -> (StatusCode, Value) {
    send(app, Method::POST, &format!("/sessions/{id}/discover"), Some("application/json"), body.to_string()).await
}

pub fn ranking_order(v: &Value) -> Vec<String> {
    v["rows"].as_array().unwrap().iter().map(|r| r["activity"].as_str().unwrap().to_string()).collect()
}
