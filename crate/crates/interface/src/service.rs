//! HTTP service.
//!
//! Instances are uploaded once and referenced by id. Solves and sweeps run
//! as jobs on blocking worker threads, at most `max_concurrent` at a time;
//! a request that finds every slot taken gets 503. A request waits up to
//! `sync_wait` for its job and otherwise answers 202 with a job id to poll.

use std::collections::HashMap;
use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use carveopt_core::solver::Status;
use carveopt_core::{solve, Instance, ModelError, Scenario};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::{oneshot, Semaphore};
use tower_http::services::ServeDir;

use crate::document::{
    from_json, parse_instance, InfeasibleDocument, InstanceMetadata, ParseError, ScenarioDefaults, SolutionDocument,
};
use crate::request::ScenarioParams;
use crate::sweep::{parse_kind, run_sweep, SweepDocument, SweepParams};

pub const DEFAULT_PORT: u16 = 8080;
pub const DEFAULT_MAX_CONCURRENT: usize = 4;
const BODY_LIMIT: usize = 64 << 20;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub max_concurrent: usize,
    pub sync_wait: Duration,
    pub static_dir: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            max_concurrent: DEFAULT_MAX_CONCURRENT,
            sync_wait: Duration::from_secs(10),
            static_dir: None,
        }
    }
}

struct Stored {
    instance: Arc<Instance>,
    defaults: ScenarioDefaults,
}

/// Final answer of a job: status code and JSON body.
type Reply = (StatusCode, Value);

enum Job {
    Running,
    Done(Reply),
}

struct AppState {
    instances: RwLock<HashMap<String, Stored>>,
    jobs: Mutex<HashMap<String, Job>>,
    permits: Arc<Semaphore>,
    next_id: AtomicU64,
    sync_wait: Duration,
}

impl AppState {
    fn fresh_id(&self, prefix: &str) -> String {
        format!("{prefix}-{}", self.next_id.fetch_add(1, Ordering::Relaxed) + 1)
    }

    fn lookup(&self, id: &str) -> Option<(Arc<Instance>, ScenarioDefaults)> {
        let store = self.instances.read().expect("instance store poisoned");
        store.get(id).map(|s| (s.instance.clone(), s.defaults.clone()))
    }
}

pub fn router(config: ServiceConfig) -> Router {
    let state = Arc::new(AppState {
        instances: RwLock::default(),
        jobs: Mutex::default(),
        permits: Arc::new(Semaphore::new(config.max_concurrent.max(1))),
        next_id: AtomicU64::new(0),
        sync_wait: config.sync_wait,
    });
    let api = Router::new()
        .route("/api/v1/instances", post(upload_instance))
        .route("/api/v1/instances/{id}", get(instance_metadata))
        .route("/api/v1/solve", post(solve_handler))
        .route("/api/v1/sweeps/{kind}", post(sweep_handler))
        .route("/api/v1/jobs/{id}", get(job_handler))
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(state);
    match config.static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

fn error(status: StatusCode, message: impl Into<String>) -> Reply {
    (status, json!({ "error": message.into() }))
}

fn respond((status, body): Reply) -> Response {
    (status, Json(body)).into_response()
}

fn parse_error(e: &ParseError) -> Reply {
    let mut body = json!({ "error": e.to_string(), "kind": e.kind() });
    match e {
        ParseError::Schema { path, .. } => body["path"] = json!(path),
        ParseError::Syntax { line, column, .. } => {
            body["line"] = json!(line);
            body["column"] = json!(column);
        }
        ParseError::Invalid(violations) => {
            body["violations"] = violations
                .iter()
                .map(|v| json!({ "path": v.path, "subject": v.subject, "reason": v.reason }))
                .collect();
        }
    }
    (StatusCode::BAD_REQUEST, body)
}

fn model_error(e: &ModelError) -> Reply {
    let status = match e {
        ModelError::Solver(_) => StatusCode::INTERNAL_SERVER_ERROR,
        ModelError::ReferenceFailed { status: Status::Infeasible, .. }
        | ModelError::CalibrationFailed(Status::Infeasible) => StatusCode::UNPROCESSABLE_ENTITY,
        _ => StatusCode::BAD_REQUEST,
    };
    error(status, e.to_string())
}

#[derive(Serialize)]
struct UploadResponse {
    id: String,
    metadata: InstanceMetadata,
}

async fn upload_instance(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let (instance, defaults) = match parse_instance(&body) {
        Ok(parsed) => parsed,
        Err(e) => return respond(parse_error(&e)),
    };
    let id = state.fresh_id("inst");
    let metadata = InstanceMetadata::of(&instance);
    state.instances.write().expect("instance store poisoned").insert(
        id.clone(),
        Stored {
            instance: Arc::new(instance),
            defaults,
        },
    );
    let location = format!("/api/v1/instances/{id}");
    (
        StatusCode::CREATED,
        [(header::LOCATION, location)],
        Json(UploadResponse { id, metadata }),
    )
        .into_response()
}

async fn instance_metadata(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    match state.lookup(&id) {
        Some((instance, _)) => respond((
            StatusCode::OK,
            json!({ "id": id, "metadata": InstanceMetadata::of(&instance) }),
        )),
        None => respond(error(StatusCode::NOT_FOUND, format!("unknown instance '{id}'"))),
    }
}

#[derive(Debug, Deserialize)]
struct SolveRequest {
    instance_id: String,
    #[serde(flatten)]
    params: ScenarioParams,
    /// Answer 202 at once instead of waiting.
    #[serde(default, rename = "async")]
    background: bool,
}

#[derive(Debug, Deserialize)]
struct SweepRequest {
    instance_id: String,
    #[serde(default)]
    scenario: ScenarioParams,
    #[serde(flatten)]
    params: SweepParams,
    #[serde(default, rename = "async")]
    background: bool,
}

fn solve_reply(scenario: &Scenario, method: carveopt_core::Method) -> Reply {
    match solve(scenario, method) {
        Ok(report) => match report.status {
            Status::Infeasible | Status::Unbounded => (
                StatusCode::UNPROCESSABLE_ENTITY,
                json!(InfeasibleDocument::new(scenario, &report)),
            ),
            _ => (StatusCode::OK, json!(SolutionDocument::new(scenario, &report))),
        },
        Err(e) => model_error(&e),
    }
}

async fn solve_handler(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let req: SolveRequest = match from_json(&body) {
        Ok(r) => r,
        Err(e) => return respond(parse_error(&e)),
    };
    let Some((instance, defaults)) = state.lookup(&req.instance_id) else {
        return respond(error(StatusCode::NOT_FOUND, format!("unknown instance '{}'", req.instance_id)));
    };
    let scenario = match req.params.scenario(instance, &defaults) {
        Ok(s) => s,
        Err(e) => return respond(model_error(&e)),
    };
    let method = req.params.method();
    run_job(state, req.background, move || solve_reply(&scenario, method)).await
}

async fn sweep_handler(State(state): State<Arc<AppState>>, Path(kind): Path<String>, body: Bytes) -> Response {
    let Some(kind) = parse_kind(&kind) else {
        return respond(error(StatusCode::NOT_FOUND, format!("unknown sweep kind '{kind}'")));
    };
    let req: SweepRequest = match from_json(&body) {
        Ok(r) => r,
        Err(e) => return respond(parse_error(&e)),
    };
    let Some((instance, defaults)) = state.lookup(&req.instance_id) else {
        return respond(error(StatusCode::NOT_FOUND, format!("unknown instance '{}'", req.instance_id)));
    };
    let scenario = match req.scenario.scenario(instance, &defaults) {
        Ok(s) => s,
        Err(e) => return respond(model_error(&e)),
    };
    let params = req.params;
    run_job(state, req.background, move || match run_sweep(kind, &scenario, &params) {
        Ok(rows) => (StatusCode::OK, json!(SweepDocument::new(kind, &rows))),
        Err(e) => model_error(&e),
    })
    .await
}

async fn run_job<F>(state: Arc<AppState>, background: bool, work: F) -> Response
where
    F: FnOnce() -> Reply + Send + 'static,
{
    let Ok(permit) = state.permits.clone().try_acquire_owned() else {
        return respond(error(StatusCode::SERVICE_UNAVAILABLE, "all solver slots are busy"));
    };
    let id = state.fresh_id("job");
    state.jobs.lock().expect("job table poisoned").insert(id.clone(), Job::Running);
    let (tx, rx) = oneshot::channel();
    let worker_state = state.clone();
    let job_id = id.clone();
    tokio::task::spawn_blocking(move || {
        let reply = panic::catch_unwind(AssertUnwindSafe(work))
            .unwrap_or_else(|_| error(StatusCode::INTERNAL_SERVER_ERROR, "the job panicked"));
        drop(permit);
        let mut jobs = worker_state.jobs.lock().expect("job table poisoned");
        // A waiting request takes the reply itself; otherwise park it.
        if let Err(reply) = tx.send(reply) {
            jobs.insert(job_id, Job::Done(reply));
        }
    });
    let mut rx = rx;
    if !background {
        if let Ok(Ok(reply)) = tokio::time::timeout(state.sync_wait, &mut rx).await {
            state.jobs.lock().expect("job table poisoned").remove(&id);
            return respond(reply);
        }
    }
    {
        // The worker sends under the job lock, so a reply is either taken
        // here or, once the receiver is gone, stored by the worker.
        let mut jobs = state.jobs.lock().expect("job table poisoned");
        if let Ok(reply) = rx.try_recv() {
            if !background {
                jobs.remove(&id);
                return respond(reply);
            }
            jobs.insert(id.clone(), Job::Done(reply));
        }
        drop(rx);
    }
    let location = format!("/api/v1/jobs/{id}");
    (
        StatusCode::ACCEPTED,
        [(header::LOCATION, location)],
        Json(json!({ "job_id": id, "status": "running" })),
    )
        .into_response()
}

async fn job_handler(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    let jobs = state.jobs.lock().expect("job table poisoned");
    match jobs.get(&id) {
        None => respond(error(StatusCode::NOT_FOUND, format!("unknown job '{id}'"))),
        Some(Job::Running) => respond((StatusCode::CONFLICT, json!({ "job_id": id, "status": "running" }))),
        Some(Job::Done(reply)) => respond(reply.clone()),
    }
}
