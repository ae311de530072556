//! HTTP service: in-memory sessions over a workspace, with event dispatch,
//! previews, undo, rule editing and read access for the workbench.
//!
//! Reads run concurrently. Mutations of one session are serialized: a second
//! mutation arriving while one is in flight gets 409.

use std::collections::{HashMap, VecDeque};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use gevo_core::document::{self, diff, WorkspaceDiff};
use gevo_core::dsl::{self, Diagnostic, Item};
use gevo_core::engine::StrategyRegistry;
use gevo_core::{
    load_text, ClassId, Engine, EngineState, Event, LoadError, Model, PropagationTrace, RuleSet, Side, Value,
    WorkspaceDocument,
};
use serde::Deserialize;
use serde_json::{json, Value as JsonValue};

pub const DEFAULT_UNDO_DEPTH: usize = 50;

struct SessionData {
    engine: Engine,
    /// States before each committed event, most recent last.
    undo: VecDeque<EngineState>,
    /// Traces of committed events; `/traces/1` is the first.
    traces: Vec<PropagationTrace>,
}

struct Session {
    data: RwLock<SessionData>,
    mutating: AtomicBool,
}

/// Clears the in-flight flag when a mutation ends, however it ends.
struct MutationGuard<'a>(&'a AtomicBool);

impl Drop for MutationGuard<'_> {
    fn drop(&mut self) {
        self.0.store(false, Ordering::Release);
    }
}

impl Session {
    fn begin_mutation(&self) -> Result<MutationGuard<'_>, ApiError> {
        self.mutating
            .compare_exchange(false, true, Ordering::AcqRel, Ordering::Acquire)
            .map(|_| MutationGuard(&self.mutating))
            .map_err(|_| ApiError::new(StatusCode::CONFLICT, "another mutation of this session is in flight"))
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, SessionData> {
        self.data.read().unwrap_or_else(|e| e.into_inner())
    }

    fn write(&self) -> std::sync::RwLockWriteGuard<'_, SessionData> {
        self.data.write().unwrap_or_else(|e| e.into_inner())
    }
}

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    sessions: RwLock<HashMap<String, Arc<Session>>>,
    next_id: AtomicU64,
    undo_depth: usize,
}

impl AppState {
    pub fn new(undo_depth: usize) -> Self {
        AppState {
            inner: Arc::new(Inner { sessions: RwLock::default(), next_id: AtomicU64::new(1), undo_depth }),
        }
    }

    /// Registers a loaded model as a new session and returns its id.
    pub fn insert(&self, model: Model) -> String {
        let id = format!("s{}", self.inner.next_id.fetch_add(1, Ordering::Relaxed));
        let data = SessionData { engine: model.into_engine(), undo: VecDeque::new(), traces: Vec::new() };
        let session = Arc::new(Session { data: RwLock::new(data), mutating: AtomicBool::new(false) });
        self.inner.sessions.write().unwrap_or_else(|e| e.into_inner()).insert(id.clone(), session);
        id
    }

    fn session(&self, id: &str) -> Result<Arc<Session>, ApiError> {
        let sessions = self.inner.sessions.read().unwrap_or_else(|e| e.into_inner());
        sessions
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no session `{id}`")))
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(session_summary))
        .route("/sessions/{id}/events", post(apply_event))
        .route("/sessions/{id}/undo", post(undo))
        .route("/sessions/{id}/rules", put(update_rules).get(get_rules))
        .route("/sessions/{id}/graphs", get(get_graphs))
        .route("/sessions/{id}/graphs/{gid}", get(get_graph))
        .route("/sessions/{id}/strategies", get(get_strategies))
        .route("/sessions/{id}/lineage", get(get_lineage))
        .route("/sessions/{id}/traces/{n}", get(get_trace))
        .route("/sessions/{id}/document", get(get_document))
        .with_state(state)
}

#[derive(Debug)]
struct ApiError {
    status: StatusCode,
    body: JsonValue,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError { status, body: json!({ "error": message.into() }) }
    }

    fn diagnostics(status: StatusCode, message: &str, diags: &[Diagnostic]) -> Self {
        ApiError { status, body: json!({ "error": message, "diagnostics": diags }) }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn bad_request(message: impl Into<String>) -> ApiError {
    ApiError::new(StatusCode::BAD_REQUEST, message)
}

// ---- views -----------------------------------------------------------------

fn with_strategy(engine: &Engine, id: &ClassId, mut v: JsonValue) -> JsonValue {
    v["strategy"] = json!(engine.resolve_strategy(id));
    v
}

fn graph_view(engine: &Engine, gid: &ClassId) -> Option<JsonValue> {
    let ws = engine.workspace();
    let g = ws.graph(gid).ok()?;
    let nodes: Vec<JsonValue> = g
        .nodes
        .iter()
        .filter_map(|n| ws.node(n).ok())
        .map(|n| with_strategy(engine, &n.id, json!(n)))
        .collect();
    let relations: Vec<JsonValue> = g
        .relations
        .iter()
        .filter_map(|r| ws.relation(r).ok())
        .map(|r| with_strategy(engine, &r.id, json!(r)))
        .collect();
    Some(json!({
        "id": g.id,
        "displayName": g.id.display_name(),
        "members": g.members,
        "strategy": engine.resolve_strategy(gid),
        "nodes": nodes,
        "relations": relations,
    }))
}

/// Graphs touched by a change: changed or created graphs and graphs that
/// contain a changed or created class.
fn affected_graphs(engine: &Engine, d: &WorkspaceDiff) -> Vec<JsonValue> {
    let ws = engine.workspace();
    let touched: Vec<&ClassId> = d.created.iter().chain(&d.changed).collect();
    ws.graphs()
        .filter(|g| touched.iter().any(|c| **c == g.id || g.contains(c)))
        .filter_map(|g| graph_view(engine, &g.id))
        .collect()
}

fn diff_json(d: &WorkspaceDiff) -> JsonValue {
    let names = |ids: &[ClassId]| ids.iter().map(ClassId::display_name).collect::<Vec<_>>();
    json!({
        "created": d.created,
        "removed": d.removed,
        "changed": d.changed,
        "createdNames": names(&d.created),
    })
}

fn rules_text(rules: &RuleSet, registry: &StrategyRegistry) -> String {
    let mut doc = document::rules_document(rules);
    doc.extend(document::strategies_document(rules, registry));
    dsl::print_document(&doc)
}

// ---- handlers ----------------------------------------------------------------

async fn create_session(State(app): State<AppState>, body: String) -> ApiResult<(StatusCode, Json<JsonValue>)> {
    let model = load_text(&body).map_err(|e| match e {
        LoadError::Json(e) => bad_request(format!("invalid JSON document: {e}")),
        LoadError::Diagnostics(d) => ApiError::diagnostics(StatusCode::BAD_REQUEST, "document does not load", &d),
    })?;
    let violations = model.state.workspace.validate_all();
    if !violations.is_empty() {
        return Err(ApiError {
            status: StatusCode::BAD_REQUEST,
            body: json!({ "error": "document is inconsistent", "violations": violations }),
        });
    }
    let id = app.insert(model);
    Ok((StatusCode::CREATED, Json(json!({ "id": id }))))
}

async fn session_summary(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<JsonValue>> {
    let s = app.session(&id)?;
    let data = s.read();
    let ws = data.engine.workspace();
    Ok(Json(json!({
        "id": id,
        "graphs": ws.graphs().map(|g| &g.id).collect::<Vec<_>>(),
        "nodes": ws.nodes().count(),
        "relations": ws.relations().count(),
        "undoDepth": data.undo.len(),
        "traces": data.traces.len(),
    })))
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct EventRequest {
    name: String,
    target: String,
    #[serde(default)]
    args: Vec<JsonValue>,
    #[serde(default)]
    dry_run: bool,
}

/// JSON strings name a side, an existing class, or are plain strings.
fn resolve_arg(engine: &Engine, s: &str) -> Value {
    match s {
        "afferent" => Value::Side(Side::Afferent),
        "efferent" => Value::Side(Side::Efferent),
        _ => match s.parse::<ClassId>() {
            Ok(id) if engine.workspace().contains(&id) => Value::Class(id),
            _ => Value::Str(s.to_string()),
        },
    }
}

fn build_event(engine: &Engine, req: &EventRequest) -> ApiResult<Event> {
    let target: ClassId = req.target.parse().map_err(|e| bad_request(format!("{e}")))?;
    let args = req
        .args
        .iter()
        .map(|a| Value::from_json(a, &|s| resolve_arg(engine, s)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(bad_request)?;
    let event = Event::new(req.name.clone(), target, args);
    crate::check_event(&event, engine.rules()).map_err(|e| bad_request(e.to_string()))?;
    Ok(event)
}

async fn apply_event(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<EventRequest>,
) -> ApiResult<Json<JsonValue>> {
    let s = app.session(&id)?;
    if req.dry_run {
        let data = s.read();
        let event = build_event(&data.engine, &req)?;
        return match data.engine.dry_run(&event) {
            Ok((trace, after)) => {
                let d = diff(data.engine.workspace(), &after.workspace);
                let preview = Engine::new(after, data.engine.rules().clone());
                Ok(Json(event_response(&preview, &trace, &d, false)))
            }
            Err(aborted) => Err(aborted_error(&aborted)),
        };
    }

    let _guard = s.begin_mutation()?;
    let mut engine = s.read().engine.clone();
    let event = build_event(&engine, &req)?;
    let before = engine.state().clone();
    let trace = engine.dispatch(event).map_err(|a| aborted_error(&a))?;
    let d = diff(&before.workspace, engine.workspace());
    let body = event_response(&engine, &trace, &d, true);

    let mut data = s.write();
    data.engine = engine;
    data.undo.push_back(before);
    while data.undo.len() > app.inner.undo_depth {
        data.undo.pop_front();
    }
    data.traces.push(trace);
    let n = data.traces.len();
    drop(data);
    let mut body = body;
    body["traceId"] = json!(n);
    Ok(Json(body))
}

fn event_response(engine: &Engine, trace: &PropagationTrace, d: &WorkspaceDiff, committed: bool) -> JsonValue {
    json!({
        "committed": committed,
        "executed": trace.executed().count(),
        "trace": trace,
        "changes": diff_json(d),
        "graphs": affected_graphs(engine, d),
    })
}

fn aborted_error(aborted: &gevo_core::PropagationAborted) -> ApiError {
    ApiError {
        status: StatusCode::UNPROCESSABLE_ENTITY,
        body: json!({ "error": aborted.to_string(), "trace": aborted.trace }),
    }
}

async fn undo(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<JsonValue>> {
    let s = app.session(&id)?;
    let _guard = s.begin_mutation()?;
    let mut data = s.write();
    let previous = data.undo.pop_back().ok_or_else(|| ApiError::new(StatusCode::CONFLICT, "nothing to undo"))?;
    let d = diff(data.engine.workspace(), &previous.workspace);
    data.engine.restore(previous);
    let graphs = affected_graphs(&data.engine, &d);
    Ok(Json(json!({ "remaining": data.undo.len(), "changes": diff_json(&d), "graphs": graphs })))
}

/// Keeps the bindings of `registry` whose strategy still exists, applies to
/// the right kind, and names a class present in `state`.
fn rebind(registry: &StrategyRegistry, rules: &RuleSet, state: &EngineState) -> StrategyRegistry {
    let fits = |strategy: &str, kind| rules.strategies.get(strategy).is_some_and(|s| s.applies_to == kind);
    let ws = &state.workspace;
    StrategyRegistry {
        per_class: registry
            .per_class
            .iter()
            .filter(|(c, s)| ws.kind_of(c).is_some_and(|k| fits(s, k)))
            .map(|(c, s)| (c.clone(), s.clone()))
            .collect(),
        per_kind: registry.per_kind.iter().filter(|(k, s)| fits(s, **k)).map(|(k, s)| (*k, s.clone())).collect(),
    }
}

async fn update_rules(State(app): State<AppState>, Path(id): Path<String>, body: String) -> ApiResult<String> {
    let s = app.session(&id)?;
    let _guard = s.begin_mutation()?;
    let unprocessable = |d: Vec<Diagnostic>| ApiError::diagnostics(StatusCode::UNPROCESSABLE_ENTITY, "rules rejected", &d);
    let doc = dsl::parse_document(&body).map_err(unprocessable)?;
    let has_binds = doc.items.iter().any(|i| matches!(i, Item::Bind { .. }));

    let mut data = s.write();
    let (rules, registry) = dsl::resolve_rules(&doc, data.engine.workspace()).map_err(unprocessable)?;
    let current = if has_binds { registry } else { data.engine.registry().clone() };
    let current = rebind(&current, &rules, data.engine.state());
    for snapshot in data.undo.iter_mut() {
        let base = if has_binds { current.clone() } else { snapshot.registry.clone() };
        snapshot.registry = rebind(&base, &rules, snapshot);
    }
    data.engine.replace_rules(rules, current);
    Ok(rules_text(data.engine.rules(), data.engine.registry()))
}

async fn get_rules(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let s = app.session(&id)?;
    let data = s.read();
    let text = rules_text(data.engine.rules(), data.engine.registry());
    Ok(([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], text).into_response())
}

async fn get_graphs(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<JsonValue>> {
    let s = app.session(&id)?;
    let data = s.read();
    let graphs: Vec<JsonValue> =
        data.engine.workspace().graphs().filter_map(|g| graph_view(&data.engine, &g.id)).collect();
    Ok(Json(json!(graphs)))
}

async fn get_graph(State(app): State<AppState>, Path((id, gid)): Path<(String, String)>) -> ApiResult<Json<JsonValue>> {
    let s = app.session(&id)?;
    let data = s.read();
    gid.parse::<ClassId>()
        .ok()
        .and_then(|g| graph_view(&data.engine, &g))
        .map(Json)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no graph `{gid}`")))
}

async fn get_strategies(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<JsonValue>> {
    let s = app.session(&id)?;
    let data = s.read();
    let (rules, registry) = (data.engine.rules(), data.engine.registry());
    let strategies: Vec<JsonValue> = rules
        .strategies
        .values()
        .map(|st| {
            json!({
                "id": st.id,
                "appliesTo": st.applies_to,
                "creation": st.creation,
                "destruction": st.destruction,
                "modification": st.modification,
            })
        })
        .collect();
    let kinds: serde_json::Map<String, JsonValue> =
        registry.per_kind.iter().map(|(k, s)| (k.to_string(), json!(s))).collect();
    let classes: serde_json::Map<String, JsonValue> =
        registry.per_class.iter().map(|(c, s)| (c.to_string(), json!(s))).collect();
    Ok(Json(json!({ "strategies": strategies, "kindBindings": kinds, "classBindings": classes })))
}

async fn get_lineage(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<JsonValue>> {
    let s = app.session(&id)?;
    let data = s.read();
    Ok(Json(json!(data.engine.versions().lineage())))
}

async fn get_trace(State(app): State<AppState>, Path((id, n)): Path<(String, usize)>) -> ApiResult<Json<JsonValue>> {
    let s = app.session(&id)?;
    let data = s.read();
    n.checked_sub(1)
        .and_then(|i| data.traces.get(i))
        .map(|t| Json(json!(t)))
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no trace {n}")))
}

async fn get_document(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<WorkspaceDocument>> {
    let s = app.session(&id)?;
    let data = s.read();
    Ok(Json(WorkspaceDocument::from_state(data.engine.state(), data.engine.rules())))
}
