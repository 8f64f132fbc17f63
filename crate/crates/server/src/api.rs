//! HTTP routes. Every error body is `{"error": {"code", "message"}}`.

use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use coptic_core::collab::{CellEdit, EditError, EditEvent};
use coptic_core::formats::{self, validate, Artifact, Format, FormatError, LayerKinds, UnknownFormat};
use coptic_core::normalize::NormConfig;
use coptic_core::pipeline::{annotate, run_pipeline, PipelineConfig, PipelineError, Stage};
use coptic_core::store::{Change, Commit, CommitOutcome, StoreError};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::state::AppState;

/// Longest a client may ask `/events` to wait.
pub const MAX_WAIT_SECS: u64 = 60;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/pipeline", post(pipeline))
        .route("/api/lexicons", get(lexicons))
        .route("/api/schemas", get(schemas))
        .route("/api/docs", get(list_docs))
        .route("/api/docs/{id}", get(get_doc).put(put_doc))
        .route("/api/docs/{id}/validate", post(validate_doc))
        .route("/api/docs/{id}/annotate", post(annotate_doc))
        .route("/api/docs/{id}/commits", get(list_commits).post(commit))
        .route("/api/docs/{id}/commits/{cid}", get(get_commit))
        .route("/api/docs/{id}/diff", get(diff))
        .route("/api/docs/{id}/edits", post(edits))
        .route("/api/docs/{id}/events", get(events))
        .with_state(state)
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl ToString) -> Self {
        ApiError {
            status,
            code,
            message: message.to_string(),
        }
    }

    fn bad_request(code: &'static str, message: impl ToString) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, code, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.status.is_server_error() {
            tracing::error!(code = self.code, "{}", self.message);
        }
        let body = json!({"error": {"code": self.code, "message": self.message}});
        (self.status, Json(body)).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let (status, code) = match &e {
            StoreError::InvalidDocId(_) | StoreError::InvalidCommitId(_) => (StatusCode::BAD_REQUEST, "invalid_id"),
            StoreError::NotFound(_) | StoreError::UnknownCommit { .. } => (StatusCode::NOT_FOUND, "not_found"),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "store"),
        };
        ApiError::new(status, code, e)
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        let (status, code) = match &e {
            PipelineError::UnknownStage(_)
            | PipelineError::DuplicateStage(_)
            | PipelineError::MissingDependency { .. }
            | PipelineError::OutOfOrder { .. }
            | PipelineError::ConlluNeedsParse => (StatusCode::BAD_REQUEST, "config"),
            PipelineError::UnknownLexicon(_) => (StatusCode::BAD_REQUEST, "unknown_lexicon"),
            PipelineError::Io(_) | PipelineError::Lexicon { .. } => (StatusCode::INTERNAL_SERVER_ERROR, "pipeline"),
            _ => (StatusCode::UNPROCESSABLE_ENTITY, "pipeline"),
        };
        ApiError::new(status, code, e)
    }
}

impl From<FormatError> for ApiError {
    fn from(e: FormatError) -> Self {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "format", e)
    }
}

impl From<UnknownFormat> for ApiError {
    fn from(e: UnknownFormat) -> Self {
        ApiError::bad_request("unknown_format", e)
    }
}

impl From<EditError> for ApiError {
    fn from(e: EditError) -> Self {
        let (status, code) = match &e {
            EditError::Target { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "target"),
            EditError::Value { .. } | EditError::LayerExists(_) => (StatusCode::UNPROCESSABLE_ENTITY, "value"),
            EditError::FutureBase { .. } | EditError::FutureRevision { .. } => (StatusCode::CONFLICT, "revision"),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "edit"),
        };
        ApiError::new(status, code, e)
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::bad_request("bad_json", e.body_text())
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn text_response(body: String, format: Format, revision: Option<u64>) -> Response {
    let mut resp = ([(header::CONTENT_TYPE, format.media_type())], body).into_response();
    if let Some(r) = revision {
        resp.headers_mut().insert("x-revision", HeaderValue::from(r));
    }
    resp
}

fn parse_stages(names: &[String]) -> ApiResult<Vec<Stage>> {
    names
        .iter()
        .map(|s| Stage::from_str(s).map_err(ApiError::from))
        .collect()
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PipelineOptions {
    stages: Option<Vec<String>>,
    lexicon: Option<String>,
    /// Normalization settings in the `key = value` config syntax.
    norm: Option<String>,
    output: Option<String>,
}

impl PipelineOptions {
    fn build(&self) -> ApiResult<PipelineConfig> {
        let stages = match &self.stages {
            Some(names) => parse_stages(names)?,
            None => Stage::ALL.to_vec(),
        };
        let norm = match &self.norm {
            Some(text) => NormConfig::parse(text).map_err(|e| ApiError::bad_request("config", e))?,
            None => NormConfig::default(),
        };
        let output = match &self.output {
            Some(f) => Format::from_str(f)?,
            None => Format::Grid,
        };
        Ok(PipelineConfig::new(
            stages,
            self.lexicon.as_deref().unwrap_or("fixture"),
            norm,
            output,
        )?)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PipelineRequest {
    text: String,
    #[serde(default)]
    config: PipelineOptions,
}

async fn pipeline(
    State(state): State<Arc<AppState>>,
    body: Result<Json<PipelineRequest>, JsonRejection>,
) -> ApiResult<Response> {
    let Json(req) = body?;
    let cfg = req.config.build()?;
    let out = run_pipeline(&req.text, &cfg, &state.lexicons)?;
    Ok(text_response(out, cfg.output(), None))
}

async fn lexicons(State(state): State<Arc<AppState>>) -> Json<serde_json::Value> {
    Json(json!({"lexicons": state.lexicons.names()}))
}

async fn schemas(State(state): State<Arc<AppState>>) -> Json<serde_json::Value> {
    Json(json!({"schemas": state.schemas.keys().collect::<Vec<_>>()}))
}

async fn list_docs(State(state): State<Arc<AppState>>) -> ApiResult<Json<serde_json::Value>> {
    Ok(Json(json!({"docs": state.list()?})))
}

#[derive(Debug, Deserialize)]
struct FormatQuery {
    format: Option<String>,
}

impl FormatQuery {
    fn format(&self) -> ApiResult<Format> {
        Ok(match &self.format {
            Some(f) => Format::from_str(f)?,
            None => Format::Interchange,
        })
    }
}

async fn get_doc(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<FormatQuery>,
) -> ApiResult<Response> {
    let format = q.format()?;
    let session = state.session(&id)?;
    let (doc, revision) = {
        let wc = session.lock();
        (wc.document().clone(), wc.revision())
    };
    Ok(text_response(formats::render(&doc, format)?, format, Some(revision)))
}

async fn put_doc(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<FormatQuery>,
    body: Bytes,
) -> ApiResult<Json<serde_json::Value>> {
    let format = q.format()?;
    let text = std::str::from_utf8(&body).map_err(|e| ApiError::bad_request("encoding", e))?;
    let doc = formats::parse(text, format, &LayerKinds::known())?;
    let session = state.create_session(&id)?;
    let mut wc = session.lock();
    let event = wc.replace(doc);
    session.publish(event.revision);
    Ok(Json(json!({"revision": event.revision})))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ValidateRequest {
    schema_id: String,
    /// Validate this rendering instead of the document itself, so that
    /// locators point into it. `xml` or `grid`.
    format: Option<String>,
}

async fn validate_doc(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<ValidateRequest>, JsonRejection>,
) -> ApiResult<Json<serde_json::Value>> {
    let Json(req) = body?;
    let schema = state.schemas.get(&req.schema_id).ok_or_else(|| {
        ApiError::new(
            StatusCode::NOT_FOUND,
            "unknown_schema",
            format!("unknown schema {:?}", req.schema_id),
        )
    })?;
    let session = state.session(&id)?;
    let doc = session.lock().document().clone();
    let violations = match req.format.as_deref().map(Format::from_str).transpose()? {
        None | Some(Format::Interchange) => validate(Artifact::Document(&doc), schema),
        Some(Format::Xml) => validate(Artifact::Xml(&formats::render(&doc, Format::Xml)?), schema),
        Some(Format::Grid) => validate(Artifact::Grid(&formats::render(&doc, Format::Grid)?), schema),
        Some(Format::Conllu) => {
            return Err(ApiError::bad_request(
                "unknown_format",
                "conllu has no validation rules",
            ))
        }
    };
    Ok(Json(json!({"valid": violations.is_empty(), "violations": violations})))
}

#[derive(Debug, Serialize)]
struct Accepted {
    revision: u64,
    events: Vec<EditEvent>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnnotateRequest {
    stages: Option<Vec<String>>,
    lexicon: Option<String>,
    #[serde(default)]
    base_revision: u64,
}

/// Fills empty cells and missing layers from the pipeline; filled cells
/// are never overwritten.
async fn annotate_doc(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<AnnotateRequest>, JsonRejection>,
) -> ApiResult<Json<Accepted>> {
    let Json(req) = body?;
    let mut stages = match &req.stages {
        Some(names) => parse_stages(names)?,
        None => Stage::ALL.to_vec(),
    };
    stages.retain(|s| !matches!(s, Stage::Standardize | Stage::Segment));
    stages.insert(0, Stage::Segment);
    let cfg = PipelineConfig::new(
        stages,
        req.lexicon.as_deref().unwrap_or("fixture"),
        NormConfig::default(),
        Format::Grid,
    )?;
    let lex = state.lexicons.get(cfg.lexicon())?;
    let session = state.session(&id)?;
    let mut wc = session.lock();
    let annotated = annotate(wc.document(), cfg.stages(), &lex)?;
    let events = wc.fill_from(&annotated, req.base_revision)?;
    let revision = wc.revision();
    session.publish(revision);
    Ok(Json(Accepted { revision, events }))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CommitRequest {
    author: String,
    message: String,
}

async fn commit(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<CommitRequest>, JsonRejection>,
) -> ApiResult<Response> {
    let Json(req) = body?;
    if req.author.trim().is_empty() {
        return Err(ApiError::bad_request("author", "author must not be empty"));
    }
    let session = state.session(&id)?;
    let mut wc = session.lock();
    let outcome = state.repo.commit(&id, wc.document(), &req.author, &req.message)?;
    let (status, created) = match outcome {
        CommitOutcome::Created(_) => {
            wc.rebase();
            (StatusCode::CREATED, true)
        }
        CommitOutcome::Unchanged(_) => (StatusCode::OK, false),
    };
    let body = json!({"created": created, "commit": outcome.commit(), "revision": wc.revision()});
    Ok((status, Json(body)).into_response())
}

async fn list_commits(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> ApiResult<Json<serde_json::Value>> {
    let history: Vec<Commit> = state.repo.history(&id)?;
    Ok(Json(json!({"commits": history})))
}

async fn get_commit(
    State(state): State<Arc<AppState>>,
    Path((id, cid)): Path<(String, String)>,
    Query(q): Query<FormatQuery>,
) -> ApiResult<Json<serde_json::Value>> {
    let format = q.format()?;
    let commit = state.repo.get_commit(&id, &cid)?;
    let document = formats::render(&commit.document()?, format)?;
    Ok(Json(
        json!({"commit": commit, "format": format.as_str(), "document": document}),
    ))
}

#[derive(Debug, Deserialize)]
struct DiffQuery {
    a: String,
    b: String,
}

async fn diff(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<DiffQuery>,
) -> ApiResult<Json<serde_json::Value>> {
    let changes: Vec<Change> = state.repo.diff(&id, &q.a, &q.b)?;
    Ok(Json(json!({"changes": changes})))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EditsRequest {
    edits: Vec<CellEdit>,
}

async fn edits(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<EditsRequest>, JsonRejection>,
) -> ApiResult<Json<Accepted>> {
    let Json(req) = body?;
    let session = state.session(&id)?;
    let mut wc = session.lock();
    let events = wc.apply(&req.edits)?;
    let revision = wc.revision();
    session.publish(revision);
    Ok(Json(Accepted { revision, events }))
}

#[derive(Debug, Deserialize)]
struct EventsQuery {
    #[serde(default)]
    since: u64,
    /// Seconds to wait for a new event when there is none yet.
    #[serde(default)]
    wait: u64,
}

async fn events(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<EventsQuery>,
) -> ApiResult<Json<Accepted>> {
    let session = state.session(&id)?;
    let mut rx = session.subscribe();
    let wait = q.wait.min(MAX_WAIT_SECS);
    if wait > 0 {
        let _ = tokio::time::timeout(Duration::from_secs(wait), rx.wait_for(|r| *r > q.since)).await;
    }
    let wc = session.lock();
    let events = wc.events_since(q.since)?.to_vec();
    Ok(Json(Accepted {
        revision: wc.revision(),
        events,
    }))
}
