//! The `/v1` HTTP API over a published snapshot.
//!
//! Read endpoints serve an immutable [`Snapshot`] behind an `Arc`; a reload
//! swaps the whole `Arc`, so a request sees either the old or the new
//! snapshot and never a mix.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};
use std::time::SystemTime;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::cors::{Any, CorsLayer};

use crate::config::RunConfig;
use crate::disambiguate::{MergedTool, MERGED_SCHEMA};
use crate::draft::{evaluate_draft, DraftError, DraftMetadata};
use crate::enrich::{HostBudget, SharedTransport};
use crate::export::{export_document, pr_payload, submit_change, ChangeRequest, ExportError, ExportFormat, Submission};
use crate::ingest::ingest_repo_document;
use crate::layer::read_lines;
use crate::normalize::{normalize_url, Tables, UrlKind};
use crate::pipeline::Layout;
use crate::score::{FairProfile, ScoringConfig, PROFILES_SCHEMA};
use crate::stats::{chart, list_snapshots, read_snapshot, CollectionStats, StatsError};
use crate::Timestamp;

pub const DEFAULT_PER_PAGE: usize = 50;
pub const MAX_PER_PAGE: usize = 500;

/// Structured error body: `{code, message, details}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: u16,
    pub code: String,
    pub message: String,
    pub details: Value,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError { status: status.as_u16(), code: code.into(), message: message.into(), details: Value::Null }
    }

    fn with_details(mut self, details: Value) -> Self {
        self.details = details;
        self
    }

    pub fn validation(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "validation_error", message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "not_found", message)
    }

    fn transport_disabled() -> Self {
        ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "transport_disabled", "outbound transport is disabled")
    }

    fn internal(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

impl From<DraftError> for ApiError {
    fn from(e: DraftError) -> Self {
        match e {
            DraftError::Validation(errs) => {
                ApiError::validation("draft failed validation").with_details(json!({ "fields": errs }))
            }
            DraftError::UnreadableDocument(m) => {
                ApiError::new(StatusCode::BAD_REQUEST, "unreadable_document", m)
            }
            DraftError::Score(e) => ApiError::internal(e.to_string()),
        }
    }
}

impl From<ExportError> for ApiError {
    fn from(e: ExportError) -> Self {
        let code = match &e {
            ExportError::MissingName => "missing_name",
            ExportError::MissingAuthors => "missing_authors",
            ExportError::NoRepository(_) => "no_repository",
            ExportError::UnknownFormat(_) => "unknown_format",
            ExportError::Invalid(_) => "invalid_document",
            ExportError::Io { .. } => return ApiError::internal(e.to_string()),
            ExportError::Transport(_) => {
                return ApiError::new(StatusCode::BAD_GATEWAY, "transport_failure", e.to_string())
            }
        };
        ApiError::new(StatusCode::BAD_REQUEST, code, e.to_string())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SnapshotError {
    #[error("no published snapshot at {0}; run the pipeline through the stats stage first")]
    Missing(String),
    #[error(transparent)]
    Layer(#[from] crate::layer::LayerError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Everything the read endpoints serve.
#[derive(Debug, Clone, Default)]
pub struct Snapshot {
    tools: Vec<MergedTool>,
    index: HashMap<String, usize>,
    profiles: HashMap<String, FairProfile>,
    stats: BTreeMap<String, CollectionStats>,
    pub snapshot_at: Option<Timestamp>,
}

impl Snapshot {
    pub fn new(
        mut tools: Vec<MergedTool>,
        profiles: Vec<FairProfile>,
        stats: Vec<CollectionStats>,
    ) -> Snapshot {
        tools.sort_by(|a, b| a.tool_id.cmp(&b.tool_id));
        let index = tools.iter().enumerate().map(|(i, t)| (t.tool_id.clone(), i)).collect();
        let snapshot_at = stats.iter().map(|s| s.snapshot_at).max();
        Snapshot {
            tools,
            index,
            profiles: profiles.into_iter().map(|p| (p.tool_id.clone(), p)).collect(),
            stats: stats.into_iter().map(|s| (s.collection.clone(), s)).collect(),
            snapshot_at,
        }
    }

    /// Merged store, profiles and the newest stats document per collection.
    pub fn load(data_dir: &Path) -> Result<Snapshot, SnapshotError> {
        let layout = Layout::new(data_dir);
        for p in [layout.merged(), layout.profiles()] {
            if !p.exists() {
                return Err(SnapshotError::Missing(p.display().to_string()));
            }
        }
        let tools: Vec<MergedTool> = read_lines(&layout.merged(), MERGED_SCHEMA)?;
        let profiles: Vec<FairProfile> = read_lines(&layout.profiles(), PROFILES_SCHEMA)?;
        let mut stats = Vec::new();
        let stats_root = data_dir.join("stats");
        let mut dirs: Vec<PathBuf> = std::fs::read_dir(&stats_root)
            .map_err(|_| SnapshotError::Missing(stats_root.display().to_string()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_dir())
            .collect();
        dirs.sort();
        for d in dirs {
            let Some(name) = d.file_name().and_then(|n| n.to_str()) else { continue };
            if let Some(latest) = list_snapshots(data_dir, name).pop() {
                stats.push(read_snapshot(&latest)?);
            }
        }
        Ok(Snapshot::new(tools, profiles, stats))
    }

    pub fn tools(&self) -> &[MergedTool] {
        &self.tools
    }

    pub fn tool(&self, id: &str) -> Option<&MergedTool> {
        self.index.get(id).map(|&i| &self.tools[i])
    }

    pub fn profile(&self, id: &str) -> Option<&FairProfile> {
        self.profiles.get(id)
    }

    pub fn stats(&self, collection: &str) -> Option<&CollectionStats> {
        self.stats.get(collection)
    }
}

/// Shared service state.
pub struct AppState {
    snapshot: RwLock<Arc<Snapshot>>,
    pub tables: Tables,
    pub scoring: ScoringConfig,
    pub transport: SharedTransport,
    pub budget: HostBudget,
    /// Timestamp stamped on draft evaluations, so repeated calls agree.
    pub evaluated_at: Timestamp,
    pub cors_origin: String,
}

impl AppState {
    pub fn new(
        snapshot: Snapshot,
        tables: Tables,
        scoring: ScoringConfig,
        transport: SharedTransport,
        per_host: usize,
    ) -> AppState {
        let evaluated_at = snapshot.snapshot_at.unwrap_or(chrono::DateTime::UNIX_EPOCH);
        AppState {
            snapshot: RwLock::new(Arc::new(snapshot)),
            tables,
            scoring,
            transport,
            budget: HostBudget::new(per_host),
            evaluated_at,
            cors_origin: "*".into(),
        }
    }

    pub fn from_config(config: &RunConfig) -> Result<AppState, Box<dyn std::error::Error + Send + Sync>> {
        let snapshot = Snapshot::load(&config.data_dir())?;
        let mut state = AppState::new(
            snapshot,
            config.tables()?,
            config.scoring()?,
            config.transport()?,
            config.enrich.per_host,
        );
        state.cors_origin = config.serve.cors_origin.clone();
        Ok(state)
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.snapshot.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    /// Atomically publishes a new snapshot.
    pub fn replace(&self, snapshot: Snapshot) {
        *self.snapshot.write().unwrap_or_else(|e| e.into_inner()) = Arc::new(snapshot);
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    let cors = if state.cors_origin == "*" {
        CorsLayer::new().allow_origin(Any).allow_methods(Any).allow_headers(Any)
    } else {
        let origin = HeaderValue::from_str(&state.cors_origin).unwrap_or(HeaderValue::from_static("null"));
        CorsLayer::new().allow_origin(origin).allow_methods(Any).allow_headers(Any)
    };
    Router::new()
        .route("/v1/healthz", get(healthz))
        .route("/v1/tools", get(list_tools))
        .route("/v1/tools/{tool_id}", get(get_tool))
        .route("/v1/stats/{collection}", get(get_stats))
        .route("/v1/charts/{collection}/{chart_id}", get(get_chart))
        .route("/v1/evaluate", post(evaluate))
        .route("/v1/fetch-metadata", post(fetch_metadata))
        .route("/v1/export/{format}", post(export))
        .route("/v1/pr", post(pull_request))
        .layer(cors)
        .with_state(state)
}

async fn healthz(State(st): State<Arc<AppState>>) -> Json<Value> {
    let snap = st.snapshot();
    Json(json!({
        "status": "ok",
        "tools": snap.tools.len(),
        "snapshot_at": snap.snapshot_at,
        "weights_version": st.scoring.weights_version,
    }))
}

#[derive(Debug, Deserialize)]
struct ToolsQuery {
    collection: Option<String>,
    page: Option<usize>,
    per_page: Option<usize>,
}

/// One page of `GET /v1/tools`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolPage {
    pub collection: String,
    pub page: usize,
    pub per_page: usize,
    pub total: usize,
    pub tools: Vec<MergedTool>,
}

async fn list_tools(
    State(st): State<Arc<AppState>>,
    Query(q): Query<ToolsQuery>,
) -> Result<Json<ToolPage>, ApiError> {
    let page = q.page.unwrap_or(1);
    let per_page = q.per_page.unwrap_or(DEFAULT_PER_PAGE);
    if page == 0 {
        return Err(ApiError::validation("page starts at 1"));
    }
    if per_page == 0 || per_page > MAX_PER_PAGE {
        return Err(ApiError::validation(format!("per_page must be in 1..={MAX_PER_PAGE}")));
    }
    let collection = q.collection.unwrap_or_else(|| crate::stats::ALL.into());
    let snap = st.snapshot();
    let selected = crate::stats::filter_collection(&snap.tools, &collection);
    if selected.is_empty() && collection != crate::stats::ALL && snap.stats(&collection).is_none() {
        return Err(ApiError::not_found(format!("unknown collection `{collection}`")));
    }
    let total = selected.len();
    let tools = selected.into_iter().skip((page - 1) * per_page).take(per_page).cloned().collect();
    Ok(Json(ToolPage { collection, page, per_page, total, tools }))
}

fn weights_conflict(expected: &str, found: &str) -> ApiError {
    ApiError::new(
        StatusCode::CONFLICT,
        "weights_version_mismatch",
        format!("snapshot was scored with weights `{found}`, service uses `{expected}`"),
    )
    .with_details(json!({ "expected": expected, "found": found }))
}

async fn get_tool(State(st): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Result<Json<Value>, ApiError> {
    let snap = st.snapshot();
    let tool = snap.tool(&id).ok_or_else(|| ApiError::not_found(format!("unknown tool `{id}`")))?;
    let profile = snap.profile(&id);
    if let Some(p) = profile {
        if p.weights_version != st.scoring.weights_version {
            return Err(weights_conflict(&st.scoring.weights_version, &p.weights_version));
        }
    }
    Ok(Json(json!({ "tool": tool, "profile": profile })))
}

fn stats_for(st: &AppState, snap: &Snapshot, collection: &str) -> Result<CollectionStats, ApiError> {
    let stats = snap
        .stats(collection)
        .ok_or_else(|| ApiError::not_found(format!("no statistics for collection `{collection}`")))?;
    if let Some(v) = &stats.scoreboard.weights_version {
        if *v != st.scoring.weights_version {
            return Err(weights_conflict(&st.scoring.weights_version, v));
        }
    }
    Ok(stats.clone())
}

async fn get_stats(
    State(st): State<Arc<AppState>>,
    UrlPath(collection): UrlPath<String>,
) -> Result<Json<CollectionStats>, ApiError> {
    let snap = st.snapshot();
    Ok(Json(stats_for(&st, &snap, &collection)?))
}

async fn get_chart(
    State(st): State<Arc<AppState>>,
    UrlPath((collection, chart_id)): UrlPath<(String, String)>,
) -> Result<Json<Value>, ApiError> {
    let snap = st.snapshot();
    let stats = stats_for(&st, &snap, &collection)?;
    chart(&stats, &chart_id)
        .map(Json)
        .map_err(|_| ApiError::not_found(format!("unknown chart `{chart_id}`")))
}

fn parse_body<T: serde::de::DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::validation(e.to_string()))
}

async fn evaluate(State(st): State<Arc<AppState>>, body: Bytes) -> Result<Json<Value>, ApiError> {
    let draft: DraftMetadata = parse_body(&body)?;
    let eval = evaluate_draft(&draft, &st.tables, &st.scoring, st.evaluated_at)?;
    Ok(Json(serde_json::to_value(eval).map_err(|e| ApiError::internal(e.to_string()))?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectorKind {
    Observatory,
    Repo,
    Upload,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Selector {
    pub kind: SelectorKind,
    #[serde(rename = "ref")]
    pub reference: String,
}

/// Draft prefill for a selector; blocking when it reaches the transport.
pub fn fetch_draft(st: &AppState, selector: &Selector) -> Result<DraftMetadata, ApiError> {
    match selector.kind {
        SelectorKind::Observatory => {
            let snap = st.snapshot();
            let tool = snap
                .tool(&selector.reference)
                .ok_or_else(|| ApiError::not_found(format!("unknown tool `{}`", selector.reference)))?;
            Ok(DraftMetadata::from_tool(tool))
        }
        SelectorKind::Upload => Ok(DraftMetadata::from_upload(&selector.reference)?),
        SelectorKind::Repo => {
            if !st.transport.enabled() {
                return Err(ApiError::transport_disabled());
            }
            let u = normalize_url(&selector.reference, &st.tables.hosts)
                .map_err(|e| ApiError::validation(e.to_string()))?;
            if u.kind != UrlKind::Repository {
                return Err(ApiError::validation(format!("`{}` is not a repository URL", selector.reference)));
            }
            let host = u.normalized.split('/').next().unwrap_or_default().to_owned();
            let bytes = {
                let _permit = st.budget.acquire(&host);
                st.transport.fetch_repository(&u.normalized)
            }
            .map_err(|e| match e {
                crate::enrich::TransportError::NotFound => {
                    ApiError::not_found(format!("repository `{}` not found", u.normalized))
                }
                other => ApiError::new(StatusCode::BAD_GATEWAY, "transport_failure", other.to_string()),
            })?;
            let record = ingest_repo_document(&selector.reference, &bytes, &st.tables.hosts, st.evaluated_at)
                .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "unreadable_document", e.to_string()))?;
            Ok(DraftMetadata::from_record(&record))
        }
    }
}

async fn fetch_metadata(State(st): State<Arc<AppState>>, body: Bytes) -> Result<Json<DraftMetadata>, ApiError> {
    let selector: Selector = parse_body(&body)?;
    let draft = tokio::task::spawn_blocking(move || fetch_draft(&st, &selector))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
    Ok(Json(draft))
}

/// Body of export and PR requests: a published tool or an inline draft.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExportRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub draft: Option<DraftMetadata>,
}

fn resolve_tool(st: &AppState, tool_id: Option<&str>, draft: Option<&DraftMetadata>) -> Result<MergedTool, ApiError> {
    match (tool_id, draft) {
        (Some(id), None) => st
            .snapshot()
            .tool(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("unknown tool `{id}`"))),
        (None, Some(d)) => Ok(d.to_tool(&st.tables)?),
        _ => Err(ApiError::validation("give exactly one of `tool_id` or `draft`")),
    }
}

async fn export(
    State(st): State<Arc<AppState>>,
    UrlPath(format): UrlPath<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let format: ExportFormat = format.parse().map_err(|_| ApiError::not_found(format!("unknown format `{format}`")))?;
    let req: ExportRequest = parse_body(&body)?;
    let tool = resolve_tool(&st, req.tool_id.as_deref(), req.draft.as_ref())?;
    let doc = export_document(&tool, format)?;
    let disposition = format!("attachment; filename=\"{}\"", format.file_name());
    Ok((
        [(header::CONTENT_TYPE, format.media_type().to_owned()), (header::CONTENT_DISPOSITION, disposition)],
        doc,
    )
        .into_response())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub draft: Option<DraftMetadata>,
    #[serde(default = "default_format")]
    pub format: ExportFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repo: Option<String>,
    #[serde(default = "default_true")]
    pub dry_run: bool,
}

fn default_format() -> ExportFormat {
    ExportFormat::Cff
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrResponse {
    pub submission: Submission,
    pub request: ChangeRequest,
}

async fn pull_request(State(st): State<Arc<AppState>>, body: Bytes) -> Result<Json<PrResponse>, ApiError> {
    let req: PrRequest = parse_body(&body)?;
    let tool = resolve_tool(&st, req.tool_id.as_deref(), req.draft.as_ref())?;
    let change = pr_payload(&tool, req.format, req.repo.as_deref(), req.dry_run)?;
    if !change.dry_run && !st.transport.enabled() {
        return Err(ApiError::transport_disabled());
    }
    let submission = tokio::task::spawn_blocking({
        let st = st.clone();
        let change = change.clone();
        move || submit_change(&change, st.transport.as_ref())
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))??;
    Ok(Json(PrResponse { submission, request: change }))
}

fn report_mtime(data_dir: &Path) -> Option<SystemTime> {
    std::fs::metadata(Layout::new(data_dir).report()).and_then(|m| m.modified()).ok()
}

/// Binds, serves, and republishes the snapshot whenever a pipeline run
/// finishes in the data directory.
pub async fn serve(config: RunConfig) -> Result<(), Box<dyn std::error::Error + Send + Sync>> {
    let state = Arc::new(AppState::from_config(&config)?);
    let mut app = router(state.clone());
    if let Some(dir) = &config.serve.static_dir {
        app = app.fallback_service(tower_http::services::ServeDir::new(config.resolve(dir)));
    }
    if config.serve.reload_secs > 0 {
        let data_dir = config.data_dir();
        let every = std::time::Duration::from_secs(config.serve.reload_secs);
        let st = state.clone();
        tokio::spawn(async move {
            let mut seen = report_mtime(&data_dir);
            loop {
                tokio::time::sleep(every).await;
                let now = report_mtime(&data_dir);
                if now == seen || data_dir.join(".lock").exists() {
                    continue;
                }
                let dir = data_dir.clone();
                match tokio::task::spawn_blocking(move || Snapshot::load(&dir)).await {
                    Ok(Ok(snap)) => {
                        st.replace(snap);
                        seen = now;
                        tracing::info!("snapshot reloaded");
                    }
                    Ok(Err(e)) => tracing::warn!(error = %e, "snapshot reload failed"),
                    Err(e) => tracing::warn!(error = %e, "snapshot reload panicked"),
                }
            }
        });
    }
    let listener = tokio::net::TcpListener::bind(config.serve.bind).await?;
    tracing::info!(addr = %listener.local_addr()?, "serving");
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
