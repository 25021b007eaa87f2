//! Backend for the rule playground: one live session exposed over HTTP with
//! a server-sent event stream of every change.
//!
//! Routes:
//!
//! | method | path | |
//! |---|---|---|
//! | GET | `/api/ruleset` | canonical rule document |
//! | PUT | `/api/ruleset` | replace the document |
//! | PATCH | `/api/ruleset/{channel}/rules/{id}` | edit one rule |
//! | GET | `/api/vars` | blackboard contents |
//! | PUT | `/api/vars/{address}` | write one variable (JSON scalar body) |
//! | POST | `/api/step` | advance ticks, body `{"n":1}` |
//! | GET | `/api/state` | last resolved state, 204 before the first step |
//! | GET | `/api/events` | `text/event-stream` |
//!
//! Every response carries the session revision it reflects in the
//! `x-ddac-revision` header. Errors use `{status, code, message, location?}`.

mod session;

use std::convert::Infallible;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, MutexGuard};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, HeaderName, HeaderValue, StatusCode};
use axum::response::sse::{Event as SseEvent, KeepAlive, Sse};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, patch, put};
use axum::{Json, Router};
use futures::stream::{self, Stream, StreamExt};
use serde::Deserialize;
use serde_json::json;
use tokio::sync::broadcast;

pub use session::{ApiError, Event, Session, MAX_STEP};

/// Default listening port.
pub const DEFAULT_PORT: u16 = 7351;

pub const REVISION_HEADER: HeaderName = HeaderName::from_static("x-ddac-revision");

const EVENT_BUFFER: usize = 1024;

/// Shared service state: the session behind a lock plus the event fan-out.
///
/// Mutations hold the lock while broadcasting, so events leave in revision
/// order.
pub struct AppState {
    session: Mutex<Session>,
    events: broadcast::Sender<Event>,
}

impl AppState {
    pub fn new(session: Session) -> Arc<Self> {
        let (events, _) = broadcast::channel(EVENT_BUFFER);
        Arc::new(AppState {
            session: Mutex::new(session),
            events,
        })
    }

    pub fn session(&self) -> MutexGuard<'_, Session> {
        self.session.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Runs a mutation and, on success, broadcasts its event and builds the
    /// response from the post-mutation session.
    fn mutate<R>(
        &self,
        f: impl FnOnce(&mut Session) -> Result<Event, ApiError>,
        respond: impl FnOnce(&Session, &Event) -> R,
    ) -> Result<R, ApiError> {
        let mut s = self.session();
        let ev = f(&mut s)?;
        let out = respond(&s, &ev);
        let _ = self.events.send(ev);
        Ok(out)
    }
}

fn revision_header(rev: u64) -> [(HeaderName, HeaderValue); 1] {
    [(REVISION_HEADER, HeaderValue::from(rev))]
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (
            status,
            [(
                header::CONTENT_TYPE,
                HeaderValue::from_static("application/problem+json"),
            )],
            Json(self),
        )
            .into_response()
    }
}

async fn get_ruleset(State(app): State<Arc<AppState>>) -> Response {
    let s = app.session();
    (
        revision_header(s.revision()),
        [(header::CONTENT_TYPE, HeaderValue::from_static("application/json"))],
        s.ruleset_document(),
    )
        .into_response()
}

fn ack(_: &Session, ev: &Event) -> Response {
    (revision_header(ev.revision), Json(json!({ "revision": ev.revision }))).into_response()
}

async fn put_ruleset(State(app): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    app.mutate(|s| s.put_ruleset(&body), ack)
}

async fn patch_rule(
    State(app): State<Arc<AppState>>,
    Path((channel, id)): Path<(String, String)>,
    body: Bytes,
) -> Result<Response, ApiError> {
    app.mutate(|s| s.patch_rule(&channel, &id, &body), ack)
}

async fn get_vars(State(app): State<Arc<AppState>>) -> Response {
    let s = app.session();
    (
        revision_header(s.revision()),
        Json(json!({ "revision": s.revision(), "variables": s.variables() })),
    )
        .into_response()
}

async fn put_var(
    State(app): State<Arc<AppState>>,
    Path(address): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    app.mutate(|s| s.set_variable(&address, &body), ack)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StepBody {
    #[serde(default = "one")]
    n: i64,
}

fn one() -> i64 {
    1
}

fn state_body(s: &Session) -> Response {
    (
        revision_header(s.revision()),
        Json(json!({ "revision": s.revision(), "state": s.last() })),
    )
        .into_response()
}

async fn step(State(app): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let n = if body.iter().all(u8::is_ascii_whitespace) {
        1
    } else {
        serde_json::from_slice::<StepBody>(&body)
            .map_err(|e| ApiError::new(400, "bad-request", e.to_string()))?
            .n
    };
    app.mutate(|s| s.step(n), |s, _| state_body(s))
}

async fn get_state(State(app): State<Arc<AppState>>) -> Response {
    let s = app.session();
    if s.last().is_none() {
        return (StatusCode::NO_CONTENT, revision_header(s.revision())).into_response();
    }
    state_body(&s)
}

fn sse(ev: &Event) -> SseEvent {
    SseEvent::default()
        .event(ev.kind)
        .id(ev.revision.to_string())
        .data(&ev.json)
}

/// Sync event first, then every broadcast change with a newer revision. A
/// subscriber that falls behind the buffer is re-synced.
fn event_stream(app: Arc<AppState>) -> impl Stream<Item = Result<SseEvent, Infallible>> {
    let (sync, rx) = {
        let s = app.session();
        (s.sync_event(), app.events.subscribe())
    };
    let seen = sync.revision;
    let rest = stream::unfold((app, rx, seen), |(app, mut rx, seen)| async move {
        loop {
            match rx.recv().await {
                Ok(ev) if ev.revision <= seen => continue,
                Ok(ev) => {
                    let seen = ev.revision;
                    return Some((ev, (app, rx, seen)));
                }
                Err(broadcast::error::RecvError::Lagged(_)) => {
                    let sync = app.session().sync_event();
                    let seen = sync.revision;
                    return Some((sync, (app, rx, seen)));
                }
                Err(broadcast::error::RecvError::Closed) => return None,
            }
        }
    });
    stream::once(async move { sync }).chain(rest).map(|ev| Ok(sse(&ev)))
}

async fn events(State(app): State<Arc<AppState>>) -> impl IntoResponse {
    let rev = app.session().revision();
    (
        revision_header(rev),
        Sse::new(event_stream(app)).keep_alive(KeepAlive::default()),
    )
}

const PLACEHOLDER: &str = "<!doctype html><title>ddac playground</title>\
<p>The playground API is running under <code>/api</code>. \
Start the server with <code>--ui-dir</code> to serve the built interface here.</p>";

/// Builds the router. With `ui_dir`, static files are served from it at `/`.
pub fn router(app: Arc<AppState>, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/ruleset", get(get_ruleset).put(put_ruleset))
        .route("/api/ruleset/{channel}/rules/{id}", patch(patch_rule))
        .route("/api/vars", get(get_vars))
        .route("/api/vars/{address}", put(put_var))
        .route("/api/step", axum::routing::post(step))
        .route("/api/state", get(get_state))
        .route("/api/events", get(events))
        .with_state(app);
    match ui_dir {
        Some(dir) => api.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => api.route("/", get(|| async { Html(PLACEHOLDER) })),
    }
}

/// Serves until the listener fails.
pub async fn serve(
    listener: tokio::net::TcpListener,
    app: Arc<AppState>,
    ui_dir: Option<PathBuf>,
) -> std::io::Result<()> {
    axum::serve(listener, router(app, ui_dir)).await
}
