//! JSON-over-HTTP service for interactive sessions.
//!
//! Requests for one session are serialized through that session's lock;
//! different sessions proceed independently, and training runs on the
//! blocking pool so it never stalls the runtime.

mod state;
mod views;

use std::collections::{BTreeMap, BTreeSet};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::header;
use axum::response::IntoResponse;
use axum::routing::{get, post, put};
use axum::{Json, Router};
use cactus_core::conflict::export_conflict;
use cactus_core::objective::{serialize_objective_function, Issue};
use cactus_core::stats::{feature_plot_data, FeatureSeries, CONFLICT_BOX_ATTRIBUTES};
use cactus_core::{
    detect_conflicts, parse_objective_function, rank_conflicts, recommend_weights, resolve_conflict, Conflict,
    GalleryEntry, ModelEvaluation, ObjectiveFunction, ObjectiveKey, Resolution, RowId, Session, WeightRecommendation,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub use state::{AppState, SessionSlot, DEFAULT_SAMPLE_CAP};
pub use views::{BoxView, ConflictView, ConflictsView};

use crate::workflow::{check_function, run_selection, ConflictSummary, SplitParams};
use crate::ApiError;

type Shared = State<Arc<AppState>>;
type ApiResult<T> = Result<Json<T>, ApiError>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{s}", get(get_session))
        .route("/api/sessions/{s}/function", post(upload_function).get(get_function))
        .route("/api/sessions/{s}/conflicts", get(get_conflicts))
        .route("/api/sessions/{s}/conflicts/{hash}/resolve", post(resolve))
        .route("/api/sessions/{s}/weights", put(set_weights))
        .route("/api/sessions/{s}/recommendations", get(recommendations))
        .route("/api/sessions/{s}/train", post(train))
        .route("/api/sessions/{s}/gallery", get(gallery))
        .route("/api/sessions/{s}/revert", post(revert))
        .route("/api/sessions/{s}/export/function", get(export_function))
        .route("/api/sessions/{s}/export/conflicts/{hash}", get(export_conflict_ids))
        .route("/api/sessions/{s}/featureplots", get(feature_plots))
        .with_state(state)
}

/// Binds `port` on all interfaces and serves until the process ends.
pub async fn serve(port: u16, data_dir: PathBuf, sample_cap: usize) -> anyhow::Result<()> {
    std::fs::create_dir_all(&data_dir)?;
    let state = Arc::new(AppState::new(data_dir).with_sample_cap(sample_cap));
    let addr = SocketAddr::from(([0, 0, 0, 0], port));
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| anyhow::anyhow!("BindError: cannot bind {addr}: {e}"))?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await?;
    Ok(())
}

/// Parses a JSON body; an empty body means `T::default()`.
fn body<T: DeserializeOwned + Default>(bytes: &Bytes) -> Result<T, ApiError> {
    if bytes.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    serde_json::from_slice(bytes).map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))
}

fn find_conflict(of: &ObjectiveFunction, hash: &str) -> Result<Conflict, ApiError> {
    detect_conflicts(of)
        .find_by_hash(of, hash)
        .cloned()
        .ok_or_else(|| {
            ApiError::new(
                "StaleConflict",
                format!("conflict `{hash}` does not match the current function"),
            )
            .with_context(json!({ "hash": hash }))
        })
}

async fn health() -> Json<Value> {
    Json(json!({ "status": "ok" }))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    dataset: String,
    #[serde(default)]
    split: SplitParams,
    #[serde(default)]
    recommender_seed: u64,
}

#[derive(Debug, Serialize)]
struct SessionInfo {
    session_id: String,
    dataset: String,
    n_rows: usize,
    feature_names: Vec<String>,
    label_domain: Vec<String>,
    train_ids: BTreeSet<RowId>,
    validation_ids: BTreeSet<RowId>,
    gallery_len: usize,
}

fn session_info(slot: &SessionSlot) -> SessionInfo {
    SessionInfo {
        session_id: slot.session.id.clone(),
        dataset: slot.session.dataset_ref.clone(),
        n_rows: slot.dataset.len(),
        feature_names: slot.dataset.feature_names().to_vec(),
        label_domain: slot.dataset.label_domain().to_vec(),
        train_ids: slot.session.split.train_ids.clone(),
        validation_ids: slot.session.split.validation_ids.clone(),
        gallery_len: slot.session.gallery().len(),
    }
}

async fn create_session(State(app): Shared, bytes: Bytes) -> ApiResult<SessionInfo> {
    let req: CreateSession = body(&bytes)?;
    if req.dataset.is_empty() {
        return Err(ApiError::bad_request("`dataset` is required"));
    }
    let ds = app.load_dataset(&req.dataset)?;
    let split = req.split.apply(&ds)?;
    let id = uuid::Uuid::new_v4().simple().to_string();
    let function = ObjectiveFunction::new(id.clone(), ds.name());
    let session = Session::new(id, ds.name(), split, function, req.recommender_seed);
    let slot = app.insert(session, ds)?;
    let slot = slot.lock().await;
    Ok(Json(session_info(&slot)))
}

async fn get_session(State(app): Shared, Path(s): Path<String>) -> ApiResult<SessionInfo> {
    let slot = app.get(&s)?;
    let slot = slot.lock().await;
    Ok(Json(session_info(&slot)))
}

#[derive(Debug, Serialize)]
struct FunctionResponse {
    function: ObjectiveFunction,
    warnings: Vec<Issue>,
}

async fn upload_function(State(app): Shared, Path(s): Path<String>, bytes: Bytes) -> ApiResult<FunctionResponse> {
    let of = parse_objective_function(&bytes)?;
    let slot = app.get(&s)?;
    let mut slot = slot.lock().await;
    let warnings = check_function(&of, &slot.dataset, &slot.session.split)?;
    slot.session.current = of.clone();
    app.persist(&slot)?;
    Ok(Json(FunctionResponse { function: of, warnings }))
}

async fn get_function(State(app): Shared, Path(s): Path<String>) -> ApiResult<ObjectiveFunction> {
    let slot = app.get(&s)?;
    let slot = slot.lock().await;
    Ok(Json(slot.session.current.clone()))
}

async fn get_conflicts(State(app): Shared, Path(s): Path<String>) -> ApiResult<ConflictsView> {
    let slot = app.get(&s)?;
    let slot = slot.lock().await;
    let of = &slot.session.current;
    check_function(of, &slot.dataset, &slot.session.split)?;
    let conflicts = rank_conflicts(&detect_conflicts(of))
        .iter()
        .map(|c| views::conflict_view(&slot.view, &slot.dataset, of, c))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Json(ConflictsView {
        function_id: of.id.clone(),
        conflicts,
    }))
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ResolveAction {
    MoveToLeft,
    MoveToRight,
    #[default]
    RemoveFromBoth,
    /// Returns the ids file in the response instead of writing it.
    Export,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ResolveRequest {
    action: ResolveAction,
}

async fn resolve(State(app): Shared, Path((s, hash)): Path<(String, String)>, bytes: Bytes) -> ApiResult<Value> {
    let req: ResolveRequest = serde_json::from_slice(&bytes)
        .map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))?;
    let slot = app.get(&s)?;
    let mut slot = slot.lock().await;
    let conflict = find_conflict(&slot.session.current, &hash)?;
    let action = match req.action {
        ResolveAction::MoveToLeft => Resolution::MoveToLeft,
        ResolveAction::MoveToRight => Resolution::MoveToRight,
        ResolveAction::RemoveFromBoth => Resolution::RemoveFromBoth,
        ResolveAction::Export => {
            let text = export_conflict(&slot.session.current, &conflict);
            return Ok(Json(json!({ "export": text })));
        }
    };
    let next = resolve_conflict(&slot.session.current, &conflict, &action)?;
    let remaining: Vec<ConflictSummary> = rank_conflicts(&detect_conflicts(&next))
        .iter()
        .map(|c| ConflictSummary::new(&next, c))
        .collect();
    slot.session.current = next;
    app.persist(&slot)?;
    Ok(Json(json!({
        "function": slot.session.current,
        "conflicts": remaining,
    })))
}

async fn set_weights(State(app): Shared, Path(s): Path<String>, bytes: Bytes) -> ApiResult<ObjectiveFunction> {
    let raw: BTreeMap<String, f64> = body(&bytes)?;
    let mut updates = Vec::with_capacity(raw.len());
    for (key, weight) in raw {
        let parsed: ObjectiveKey = key
            .parse()
            .map_err(|_| ApiError::bad_request(format!("invalid objective key `{key}`")))?;
        if !(0.0..=1.0).contains(&weight) {
            return Err(ApiError::new(
                "WeightOutOfRange",
                format!("weight {weight} for `{key}` is outside [0, 1]"),
            ));
        }
        updates.push((parsed, weight));
    }
    let slot = app.get(&s)?;
    let mut slot = slot.lock().await;
    let mut next = slot.session.current.clone();
    for (key, weight) in &updates {
        let mut matched = false;
        for o in next.objectives.iter_mut().filter(|o| &o.key() == key) {
            o.weight = *weight;
            matched = true;
        }
        if !matched {
            return Err(ApiError::new(
                "UnknownObjective",
                format!("the current function has no `{key}` objective"),
            ));
        }
    }
    slot.session.current = next;
    app.persist(&slot)?;
    Ok(Json(slot.session.current.clone()))
}

async fn recommendations(State(app): Shared, Path(s): Path<String>) -> ApiResult<WeightRecommendation> {
    let slot = app.get(&s)?;
    let slot = slot.lock().await;
    let history = slot.session.history();
    Ok(Json(recommend_weights(
        &history,
        &slot.session.current,
        slot.session.recommender_seed,
    )))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainRequest {
    max_samples: Option<usize>,
}

#[derive(Debug, Serialize)]
struct TrainResponse {
    evaluation: ModelEvaluation,
    gallery_entry: GalleryEntry,
}

async fn train(State(app): Shared, Path(s): Path<String>, bytes: Bytes) -> ApiResult<TrainResponse> {
    let req: TrainRequest = body(&bytes)?;
    let cap = req.max_samples.unwrap_or(app.sample_cap).min(app.sample_cap);
    let slot = app.get(&s)?;
    // Held for the whole run: mutations of this session wait for training.
    let mut slot = slot.lock().await;
    let of = slot.session.current.clone();
    check_function(&of, &slot.dataset, &slot.session.split)?;
    let dataset = slot.dataset.clone();
    let split = slot.session.split.clone();
    let job_of = of.clone();
    let (result, _) = tokio::task::spawn_blocking(move || run_selection(&job_of, &dataset, &split, Some(cap)))
        .await
        .map_err(|e| ApiError::internal(format!("training task failed: {e}")))??;
    let entry = slot.session.snapshot(&of, &result).clone();
    app.persist(&slot)?;
    Ok(Json(TrainResponse {
        evaluation: result.best,
        gallery_entry: entry,
    }))
}

async fn gallery(State(app): Shared, Path(s): Path<String>) -> ApiResult<Vec<GalleryEntry>> {
    let slot = app.get(&s)?;
    let slot = slot.lock().await;
    Ok(Json(slot.session.gallery().to_vec()))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RevertRequest {
    index: usize,
}

async fn revert(State(app): Shared, Path(s): Path<String>, bytes: Bytes) -> ApiResult<ObjectiveFunction> {
    let req: RevertRequest = serde_json::from_slice(&bytes)
        .map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))?;
    let slot = app.get(&s)?;
    let mut slot = slot.lock().await;
    slot.session.revert(req.index)?;
    app.persist(&slot)?;
    Ok(Json(slot.session.current.clone()))
}

async fn export_function(State(app): Shared, Path(s): Path<String>) -> Result<impl IntoResponse, ApiError> {
    let slot = app.get(&s)?;
    let slot = slot.lock().await;
    Ok((
        [(header::CONTENT_TYPE, "application/json")],
        serialize_objective_function(&slot.session.current),
    ))
}

async fn export_conflict_ids(
    State(app): Shared,
    Path((s, hash)): Path<(String, String)>,
) -> Result<impl IntoResponse, ApiError> {
    let slot = app.get(&s)?;
    let slot = slot.lock().await;
    let conflict = find_conflict(&slot.session.current, &hash)?;
    Ok((
        [(header::CONTENT_TYPE, "text/plain; charset=utf-8")],
        export_conflict(&slot.session.current, &conflict),
    ))
}

async fn feature_plots(
    State(app): Shared,
    Path(s): Path<String>,
    Query(q): Query<BTreeMap<String, String>>,
) -> ApiResult<Vec<FeatureSeries>> {
    let k = match q.get("k") {
        Some(k) => Some(
            k.parse::<usize>()
                .map_err(|_| ApiError::bad_request(format!("`k` must be a positive integer, got `{k}`")))?,
        ),
        None => None,
    };
    let ids: BTreeSet<RowId> = q
        .get("ids")
        .map_or("", String::as_str)
        .split(',')
        .map(str::trim)
        .filter(|id| !id.is_empty())
        .map(str::to_string)
        .collect();
    let slot = app.get(&s)?;
    let slot = slot.lock().await;
    if let Some(unknown) = ids.iter().find(|id| !slot.dataset.contains(id)) {
        return Err(ApiError::new("UnknownId", format!("unknown row id `{unknown}`")));
    }
    let k = k.unwrap_or_else(|| CONFLICT_BOX_ATTRIBUTES.min(slot.dataset.n_features()));
    Ok(Json(feature_plot_data(&slot.view, &ids, k)?))
}
