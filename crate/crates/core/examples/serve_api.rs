//! Builds the API over a fresh pipeline run and answers a few requests
//! in-process. `obs serve` binds the same router to a socket.
//!
//! cargo run --example serve_api

use std::path::Path;
use std::sync::Arc;

use axum::body::Body;
use axum::http::Request;
use http_body_util::BodyExt;
use observatory::api::{router, AppState};
use observatory::pipeline::{Pipeline, Stage};
use observatory::RunConfig;
use tower::ServiceExt;

async fn show(state: &Arc<AppState>, req: Request<Body>) -> Result<(), Box<dyn std::error::Error>> {
    let label = format!("{} {}", req.method(), req.uri());
    let resp = router(state.clone()).oneshot(req).await?;
    let status = resp.status();
    let body = resp.into_body().collect().await?.to_bytes();
    let text = String::from_utf8_lossy(&body);
    let shown: String = text.chars().take(300).collect();
    println!("{label} -> {status}\n{shown}\n");
    Ok(())
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let src = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/mixed");
    let work = tempfile::tempdir()?;
    for entry in std::fs::read_dir(&src)? {
        let p = entry?.path();
        if p.is_file() {
            std::fs::copy(&p, work.path().join(p.file_name().unwrap()))?;
        }
    }
    let config = RunConfig::load(&work.path().join("obs.toml"))?;
    Pipeline::new(config.clone())?.run(&Stage::ALL)?;
    let state = Arc::new(AppState::from_config(&config).map_err(|e| e.to_string())?);

    show(&state, Request::get("/v1/healthz").body(Body::empty())?).await?;
    show(&state, Request::get("/v1/tools?per_page=2").body(Body::empty())?).await?;
    show(&state, Request::get("/v1/charts/all/scoreboard").body(Body::empty())?).await?;
    let draft = r#"{"name": "x", "type": "cmd", "licenses": ["MIT"]}"#;
    show(
        &state,
        Request::post("/v1/evaluate").header("content-type", "application/json").body(Body::from(draft))?,
    )
    .await?;
    Ok(())
}
