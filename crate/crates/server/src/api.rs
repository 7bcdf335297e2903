//! HTTP+JSON API. Every response body is JSON except the log export, which
//! is newline-delimited JSON. Expected answers never leave the server
//! through a student-facing route.

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{ConnectInfo, Path, Query, State};
use axum::http::{header, HeaderMap, HeaderName, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use labforge_core::timefmt::{self, Timestamp};
use labforge_core::{AnswerRegistration, Error, Verdict};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::ServiceConfig;
use crate::roster::{Principal, Role, Roster};
use crate::store::{ExerciseStore, LogFilter};

pub type Clock = Arc<dyn Fn() -> Timestamp + Send + Sync>;

#[derive(Clone)]
pub struct AppState {
    pub exercises: Arc<BTreeMap<String, Arc<ExerciseStore>>>,
    pub roster: Arc<Roster>,
    pub clock: Clock,
    pub proxy_header: Option<HeaderName>,
}

impl AppState {
    /// Loads every configured exercise and replays its log.
    pub fn open(config: &ServiceConfig, roster: Roster) -> labforge_core::Result<Self> {
        let mut exercises = BTreeMap::new();
        for entry in &config.exercises {
            let definition = labforge_core::ExerciseDef::load(&entry.definition)?;
            let detection = match &entry.detection {
                Some(path) => labforge_core::detect::DetectionConfig::load(path)?,
                None => Default::default(),
            };
            let id = definition.exercise_id.clone();
            if exercises.contains_key(&id) {
                return Err(Error::config(format!("exercise `{id}` configured twice")));
            }
            let dir = config.data_dir.join(&id);
            let store = ExerciseStore::open(definition, detection, &dir, config.snapshot_every)?;
            exercises.insert(id, Arc::new(store));
        }
        let proxy_header = match &config.trusted_proxy_header {
            Some(name) => Some(
                HeaderName::try_from(name.as_str())
                    .map_err(|_| Error::config(format!("invalid header name `{name}`")))?,
            ),
            None => None,
        };
        Ok(Self {
            exercises: Arc::new(exercises),
            roster: Arc::new(roster),
            clock: Arc::new(timefmt::now),
            proxy_header,
        })
    }

    pub fn with_clock(mut self, clock: Clock) -> Self {
        self.clock = clock;
        self
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::NotFound { .. } => StatusCode::NOT_FOUND,
            Error::Validation(_) | Error::Config(_) | Error::Json(_) | Error::Yaml(_) => {
                StatusCode::BAD_REQUEST
            }
            Error::Replay { .. } | Error::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn authorize(app: &AppState, headers: &HeaderMap, role: Role) -> ApiResult<Principal> {
    let token = headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .map(str::trim)
        .ok_or_else(|| ApiError::new(StatusCode::UNAUTHORIZED, "missing bearer token"))?;
    let principal = app
        .roster
        .authenticate(token)
        .ok_or_else(|| ApiError::new(StatusCode::UNAUTHORIZED, "unknown token"))?;
    if principal.role != role {
        return Err(ApiError::new(
            StatusCode::FORBIDDEN,
            "this endpoint is not available to your role",
        ));
    }
    Ok(principal.clone())
}

fn exercise(app: &AppState, eid: &str) -> ApiResult<Arc<ExerciseStore>> {
    app.exercises.get(eid).cloned().ok_or_else(|| {
        Error::NotFound {
            kind: "exercise",
            id: eid.to_owned(),
        }
        .into()
    })
}

fn client_ip(app: &AppState, headers: &HeaderMap, peer: SocketAddr) -> String {
    app.proxy_header
        .as_ref()
        .and_then(|name| headers.get(name))
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.split(',').next())
        .map(|v| v.trim().to_owned())
        .filter(|v| !v.is_empty())
        .unwrap_or_else(|| peer.ip().to_string())
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("malformed body: {e}")))
}

/// Runs store work (which fsyncs) off the async workers.
async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> labforge_core::Result<T> + Send + 'static,
) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
        .map_err(ApiError::from)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RegistrationRequest {
    student: String,
    answers: BTreeMap<String, String>,
    generated_at: String,
}

async fn register(
    State(app): State<AppState>,
    Path(eid): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<serde_json::Value>)> {
    authorize(&app, &headers, Role::Generator)?;
    let store = exercise(&app, &eid)?;
    let req: RegistrationRequest = parse_body(&body)?;
    if !app.roster.is_student(&req.student) {
        return Err(ApiError::bad_request(format!(
            "`{}` is not a student on the roster",
            req.student
        )));
    }
    let generated_at = timefmt::parse(&req.generated_at)
        .map_err(|e| ApiError::bad_request(format!("generated_at: {e}")))?;
    let registration = AnswerRegistration {
        student_id: req.student,
        exercise_id: eid,
        answers: req.answers,
        generated_at,
    };
    let entry = blocking({
        let store = store.clone();
        move || store.register(registration)
    })
    .await?;
    let student = entry.event.student_id().to_owned();
    let first = store
        .state()
        .first_generated_at
        .get(&student)
        .map(timefmt::format);
    Ok((
        StatusCode::CREATED,
        Json(json!({
            "seq": entry.seq,
            "student": student,
            "generated_at": timefmt::format(&entry.timestamp()),
            "first_generated_at": first,
        })),
    ))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SubmissionRequest {
    answer: String,
}

#[derive(Serialize)]
struct SubmissionResponse {
    task: String,
    verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<&'static str>,
    attempts_used: u32,
    attempts_remaining: u32,
    solved: bool,
    newly_unlocked: Vec<String>,
}

fn rejection_reason(verdict: Verdict) -> Option<&'static str> {
    match verdict {
        Verdict::Correct | Verdict::Incorrect => None,
        Verdict::RejectedAttemptLimit => Some("attempt_limit"),
        Verdict::RejectedLocked => Some("locked"),
        Verdict::RejectedClosed => Some("closed"),
    }
}

async fn submit(
    State(app): State<AppState>,
    Path((eid, tid)): Path<(String, String)>,
    ConnectInfo(peer): ConnectInfo<SocketAddr>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<Json<SubmissionResponse>> {
    let principal = authorize(&app, &headers, Role::Student)?;
    let store = exercise(&app, &eid)?;
    let req: SubmissionRequest = parse_body(&body)?;
    let task = store.definition.task(&tid).map_err(ApiError::from)?;
    let max_attempts = task.max_attempts;
    let ip = client_ip(&app, &headers, peer);
    let at = (app.clock)();
    let outcome = blocking({
        let store = store.clone();
        let student = principal.id.clone();
        let tid = tid.clone();
        move || store.submit(&student, &tid, &req.answer, at, &ip)
    })
    .await?;
    let progress = outcome.state.progress(&tid);
    Ok(Json(SubmissionResponse {
        task: tid,
        verdict: outcome.verdict,
        reason: rejection_reason(outcome.verdict),
        attempts_used: progress.attempts_used,
        attempts_remaining: if progress.solved {
            0
        } else {
            max_attempts.saturating_sub(progress.attempts_used)
        },
        solved: progress.solved,
        newly_unlocked: outcome.newly_unlocked,
    }))
}

#[derive(Serialize)]
struct TaskView {
    id: String,
    title: String,
    text: String,
    points: u32,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    hints: Vec<String>,
    solved: bool,
    attempts_used: u32,
    attempts_remaining: u32,
    max_attempts: u32,
}

#[derive(Serialize)]
struct StudentView {
    exercise: String,
    student: String,
    opens_at: String,
    closes_at: String,
    score: u64,
    tasks: Vec<TaskView>,
}

async fn me(
    State(app): State<AppState>,
    Path(eid): Path<String>,
    headers: HeaderMap,
) -> ApiResult<Json<StudentView>> {
    let principal = authorize(&app, &headers, Role::Student)?;
    let store = exercise(&app, &eid)?;
    let state = store.state().student(&principal.id);
    let ex = &store.definition;
    let unlocked = state.unlocked_tasks(ex);
    let tasks = ex
        .tasks
        .values()
        .filter(|t| unlocked.contains(&t.task_id))
        .map(|t| {
            let p = state.progress(&t.task_id);
            TaskView {
                id: t.task_id.clone(),
                title: t.title.clone(),
                text: t.assignment_text.clone(),
                points: t.points,
                hints: t.hints.clone(),
                solved: p.solved,
                attempts_used: p.attempts_used,
                attempts_remaining: if p.solved {
                    0
                } else {
                    t.max_attempts.saturating_sub(p.attempts_used)
                },
                max_attempts: t.max_attempts,
            }
        })
        .collect();
    Ok(Json(StudentView {
        exercise: eid,
        student: principal.id,
        opens_at: timefmt::format(&ex.opens_at),
        closes_at: timefmt::format(&ex.closes_at),
        score: state.score(ex),
        tasks,
    }))
}

fn parse_filter(store: &ExerciseStore, params: HashMap<String, String>) -> ApiResult<LogFilter> {
    let mut filter = LogFilter::default();
    for (key, value) in params {
        let time =
            |v: &str| timefmt::parse(v).map_err(|e| ApiError::bad_request(format!("{key}: {e}")));
        match key.as_str() {
            "student" => filter.student = Some(value),
            "task" => {
                store
                    .definition
                    .task(&value)
                    .map_err(|e| ApiError::bad_request(e.to_string()))?;
                filter.task = Some(value);
            }
            "from" => filter.from = Some(time(&value)?),
            "to" => filter.to = Some(time(&value)?),
            other => return Err(ApiError::bad_request(format!("unknown filter `{other}`"))),
        }
    }
    if let (Some(from), Some(to)) = (filter.from, filter.to) {
        if from > to {
            return Err(ApiError::bad_request("`from` is after `to`"));
        }
    }
    Ok(filter)
}

async fn export_log(
    State(app): State<AppState>,
    Path(eid): Path<String>,
    headers: HeaderMap,
    query: Result<Query<HashMap<String, String>>, QueryRejection>,
) -> ApiResult<Response> {
    authorize(&app, &headers, Role::Instructor)?;
    let store = exercise(&app, &eid)?;
    let Query(params) = query.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let filter = parse_filter(&store, params)?;
    let mut body = String::new();
    for entry in store.export(&filter) {
        body.push_str(&entry.to_json());
        body.push('\n');
    }
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
}

async fn report(
    State(app): State<AppState>,
    Path(eid): Path<String>,
    headers: HeaderMap,
) -> ApiResult<Json<labforge_core::detect::DetectionReport>> {
    authorize(&app, &headers, Role::Instructor)?;
    let store = exercise(&app, &eid)?;
    let report = blocking(move || store.report()).await?;
    Ok(Json(report))
}

async fn health(State(app): State<AppState>) -> Json<serde_json::Value> {
    Json(json!({ "status": "ok", "exercises": app.exercises.keys().collect::<Vec<_>>() }))
}

pub fn router(app: AppState) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/exercises/{eid}/registrations", post(register))
        .route("/api/exercises/{eid}/tasks/{tid}/submissions", post(submit))
        .route("/api/exercises/{eid}/me", get(me))
        .route("/api/exercises/{eid}/log", get(export_log))
        .route("/api/exercises/{eid}/report", get(report))
        .with_state(app)
}

/// Serves until the future `shutdown` resolves.
pub async fn serve(
    app: AppState,
    listener: tokio::net::TcpListener,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(
        listener,
        router(app).into_make_service_with_connect_info::<SocketAddr>(),
    )
    .with_graceful_shutdown(shutdown)
    .await
}
