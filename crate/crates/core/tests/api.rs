mod common;

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use http_body_util::BodyExt;
use observatory::api::{router, AppState, Snapshot, ToolPage};
use observatory::enrich::{DisabledTransport, StubTransport};
use observatory::pipeline::{Pipeline, Stage};
use observatory::{ScoringConfig, Tables};
use serde_json::{json, Value};
use tempfile::TempDir;
use tower::ServiceExt;

struct Fixture {
    _dir: TempDir,
    state: Arc<AppState>,
}

fn published() -> Fixture {
    let (dir, cfg) = common::mixed_config();
    Pipeline::new(cfg.clone()).unwrap().run(&Stage::ALL).unwrap();
    let state = Arc::new(AppState::from_config(&cfg).unwrap());
    Fixture { _dir: dir, state }
}

async fn call(state: &Arc<AppState>, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = router(state.clone()).oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn get_json(state: &Arc<AppState>, uri: &str) -> (StatusCode, Value) {
    let (s, b) = call(state, Method::GET, uri, None).await;
    (s, serde_json::from_slice(&b).unwrap())
}

async fn post_json(state: &Arc<AppState>, uri: &str, body: Value) -> (StatusCode, Value) {
    let (s, b) = call(state, Method::POST, uri, Some(body)).await;
    (s, serde_json::from_slice(&b).unwrap())
}

#[tokio::test]
async fn healthz_reports_snapshot() {
    let f = published();
    let (s, v) = get_json(&f.state, "/v1/healthz").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["status"], "ok");
    assert_eq!(v["tools"], 41);
    assert_eq!(v["weights_version"], "default-1");
    assert_eq!(v["snapshot_at"], "2026-01-15T00:00:00Z");
}

#[tokio::test]
async fn tools_paginate_without_overlap() {
    let f = published();
    let mut seen = Vec::new();
    for page in 1..=5 {
        let (s, v) = get_json(&f.state, &format!("/v1/tools?per_page=10&page={page}")).await;
        assert_eq!(s, StatusCode::OK);
        let p: ToolPage = serde_json::from_value(v).unwrap();
        assert_eq!(p.total, 41);
        seen.extend(p.tools.into_iter().map(|t| t.tool_id));
    }
    assert_eq!(seen.len(), 41);
    let mut sorted = seen.clone();
    sorted.sort();
    sorted.dedup();
    assert_eq!(sorted, seen);
}

#[tokio::test]
async fn tools_filter_by_collection() {
    let f = published();
    let (s, v) = get_json(&f.state, "/v1/tools?collection=RNA-seq").await;
    assert_eq!(s, StatusCode::OK);
    let p: ToolPage = serde_json::from_value(v).unwrap();
    assert!(p.total > 0 && p.total < 41);
    assert!(p.tools.iter().all(|t| t.collections.iter().any(|c| c == "RNA-seq")));

    let (s, v) = get_json(&f.state, "/v1/tools?collection=nope").await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(v["code"], "not_found");
}

#[tokio::test]
async fn bad_pagination_is_a_validation_error() {
    let f = published();
    for q in ["page=0", "per_page=0", "per_page=501", "page=x"] {
        let (s, _) = call(&f.state, Method::GET, &format!("/v1/tools?{q}"), None).await;
        assert_eq!(s, StatusCode::BAD_REQUEST, "{q}");
    }
}

#[tokio::test]
async fn tool_detail_carries_profile() {
    let f = published();
    let (s, v) = get_json(&f.state, "/v1/tools/samtools.cmd").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["tool"]["tool_id"], "samtools.cmd");
    assert_eq!(v["profile"]["tool_id"], "samtools.cmd");
    assert_eq!(v["profile"]["indicators"].as_array().unwrap().len(), 12);

    let (s, v) = get_json(&f.state, "/v1/tools/nothing.cmd").await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(v["code"], "not_found");
}

#[tokio::test]
async fn stale_weights_are_a_conflict() {
    let f = published();
    let snap = f.state.snapshot();
    let mut scoring = ScoringConfig::bundled().clone();
    scoring.weights_version = "other-2".into();
    let state = Arc::new(AppState::new(
        (*snap).clone(),
        Tables::bundled().clone(),
        scoring,
        Arc::new(DisabledTransport),
        2,
    ));
    let (s, v) = get_json(&state, "/v1/tools/samtools.cmd").await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(v["code"], "weights_version_mismatch");
    assert_eq!(v["details"]["found"], "default-1");
    let (s, _) = get_json(&state, "/v1/stats/all").await;
    assert_eq!(s, StatusCode::CONFLICT);
}

#[tokio::test]
async fn stats_and_charts() {
    let f = published();
    let (s, v) = get_json(&f.state, "/v1/stats/all").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["n_tools"], 41);
    let sum: u64 = v["source_breakdown"]["by_combination"].as_object().unwrap().values().map(|x| x.as_u64().unwrap()).sum();
    assert_eq!(sum, 41);

    for chart in [
        "completeness",
        "scoreboard",
        "licenses",
        "sources",
        "types",
        "versioning",
        "repositories",
        "citations",
    ] {
        let (s, v) = get_json(&f.state, &format!("/v1/charts/all/{chart}")).await;
        assert_eq!(s, StatusCode::OK, "{chart}");
        assert_eq!(v["chart_id"], chart);
        assert_eq!(v["n_tools"], 41);
    }
    let (s, _) = get_json(&f.state, "/v1/charts/all/pie").await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _) = get_json(&f.state, "/v1/stats/unknown").await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn evaluate_scores_a_draft_deterministically() {
    let f = published();
    let draft = json!({
        "name": "mytool",
        "type": "cmd",
        "description": "Aligns reads",
        "repositories": ["https://github.com/me/mytool"],
        "licenses": ["MIT"],
        "authors": ["Ada Lovelace"],
    });
    let (s, a) = post_json(&f.state, "/v1/evaluate", draft.clone()).await;
    assert_eq!(s, StatusCode::OK);
    let (_, b) = post_json(&f.state, "/v1/evaluate", draft).await;
    assert_eq!(a, b);
    assert_eq!(a["profile"]["weights_version"], "default-1");
    let overall = a["profile"]["overall"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&overall));
    assert!(a["guidance"].is_object());

    let (s, v) = post_json(&f.state, "/v1/evaluate", json!({"name": "x", "colour": "red"})).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["code"], "validation_error");
}

#[tokio::test]
async fn evaluate_rejects_nameless_draft_with_field_errors() {
    let f = published();
    let (s, v) = post_json(&f.state, "/v1/evaluate", json!({"type": "cmd"})).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["code"], "validation_error");
    assert!(v["details"].to_string().contains("name"), "{v}");
}

#[tokio::test]
async fn fetch_metadata_from_observatory_and_upload() {
    let f = published();
    let (s, v) = post_json(&f.state, "/v1/fetch-metadata", json!({"kind": "observatory", "ref": "samtools.cmd"})).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["name"].as_str().unwrap().to_lowercase(), "samtools");

    let cff = "cff-version: 1.2.0\nmessage: cite\ntitle: foo\nauthors:\n  - family-names: Bar\n    given-names: Baz\n";
    let (s, v) = post_json(&f.state, "/v1/fetch-metadata", json!({"kind": "upload", "ref": cff})).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["name"], "foo");

    let (s, v) = post_json(&f.state, "/v1/fetch-metadata", json!({"kind": "upload", "ref": "[: not yaml"})).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["code"], "unreadable_document");
}

#[tokio::test]
async fn fetch_metadata_from_repo_uses_transport() {
    let f = published();
    let (s, v) = post_json(&f.state, "/v1/fetch-metadata", json!({"kind": "repo", "ref": "https://github.com/none/here"})).await;
    assert_eq!(s, StatusCode::NOT_FOUND, "{v}");

    let stub = StubTransport::from_json(
        &json!({"repositories": {"github.com/me/tool": {
            "url": "https://github.com/me/tool", "name": "tool", "type": "lib",
            "license": "MIT", "contributors": ["Ada Lovelace"]
        }}})
        .to_string(),
    )
    .unwrap();
    let stub = Arc::new(stub);
    let state = Arc::new(AppState::new(
        (*f.state.snapshot()).clone(),
        Tables::bundled().clone(),
        ScoringConfig::bundled().clone(),
        stub.clone(),
        2,
    ));
    let (s, v) = post_json(&state, "/v1/fetch-metadata", json!({"kind": "repo", "ref": "https://github.com/me/tool"})).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["name"], "tool");
    assert_eq!(v["licenses"], json!(["MIT"]));
    assert_eq!(stub.calls.repositories.load(std::sync::atomic::Ordering::SeqCst), 1);

    let (s, _) = post_json(&state, "/v1/fetch-metadata", json!({"kind": "repo", "ref": "https://example.org/x"})).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn disabled_transport_is_503() {
    let f = published();
    let state = Arc::new(AppState::new(
        (*f.state.snapshot()).clone(),
        Tables::bundled().clone(),
        ScoringConfig::bundled().clone(),
        Arc::new(DisabledTransport),
        2,
    ));
    let (s, v) = post_json(&state, "/v1/fetch-metadata", json!({"kind": "repo", "ref": "https://github.com/a/b"})).await;
    assert_eq!(s, StatusCode::SERVICE_UNAVAILABLE);
    assert_eq!(v["code"], "transport_disabled");
    let (s, v) = post_json(&state, "/v1/pr", json!({"tool_id": "samtools.cmd", "dry_run": false})).await;
    assert_eq!(s, StatusCode::SERVICE_UNAVAILABLE);
    assert_eq!(v["code"], "transport_disabled");
}

#[tokio::test]
async fn export_formats_and_errors() {
    let f = published();
    let req = Request::post("/v1/export/cff")
        .header("content-type", "application/json")
        .body(Body::from(json!({"tool_id": "samtools.cmd"}).to_string()))
        .unwrap();
    let resp = router(f.state.clone()).oneshot(req).await.unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    let disposition = resp.headers()["content-disposition"].to_str().unwrap().to_owned();
    assert!(disposition.contains("CITATION.cff"), "{disposition}");

    let (s, v) = post_json(&f.state, "/v1/export/rdf", json!({"tool_id": "samtools.cmd"})).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(v["code"], "not_found");
    let (s, _) = post_json(&f.state, "/v1/export/cff", json!({})).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);

    let draft = json!({"draft": {"name": "d", "type": "cmd", "authors": ["Ada Lovelace"], "licenses": ["MIT"]}});
    let (s, body) = call(&f.state, Method::POST, "/v1/export/masmp", Some(draft)).await;
    assert_eq!(s, StatusCode::OK);
    let doc: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(doc["name"], "d");
    assert_eq!(doc["license"], "https://spdx.org/licenses/MIT");
}

#[tokio::test]
async fn pr_dry_run_returns_payload() {
    let f = published();
    let (s, v) = post_json(&f.state, "/v1/pr", json!({"tool_id": "samtools.cmd"})).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["submission"]["mode"], "dry_run");
    assert_eq!(v["request"]["dry_run"], true);
    assert_eq!(v["request"]["files"][0]["path"], "CITATION.cff");
}

#[tokio::test]
async fn cors_preflight_is_answered() {
    let f = published();
    let req = Request::builder()
        .method(Method::OPTIONS)
        .uri("/v1/evaluate")
        .header("origin", "https://ui.example.org")
        .header("access-control-request-method", "POST")
        .body(Body::empty())
        .unwrap();
    let resp = router(f.state.clone()).oneshot(req).await.unwrap();
    assert!(resp.status().is_success());
    assert_eq!(resp.headers()["access-control-allow-origin"], "*");
}

#[tokio::test]
async fn replace_publishes_new_snapshot() {
    let f = published();
    f.state.replace(Snapshot::new(vec![], vec![], vec![]));
    let (_, v) = get_json(&f.state, "/v1/healthz").await;
    assert_eq!(v["tools"], 0);
}
