//! HTTP routes over [`ReviewService`].

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Body;
use axum::extract::{Path, Query, Request, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use loomkit_core::model::Dataset;
use serde::Deserialize;
use serde_json::json;

use crate::frames::{FrameSource, PngDirFrames, SyntheticFrames};
use crate::service::{ReviewService, Submission};
use crate::ReviewError;

impl IntoResponse for ReviewError {
    fn into_response(self) -> Response {
        let status = match &self {
            ReviewError::InvalidRound(_) | ReviewError::InvalidDecision(_) => StatusCode::BAD_REQUEST,
            ReviewError::Conflict(_) => StatusCode::CONFLICT,
            ReviewError::UnknownTarget(_) => StatusCode::NOT_FOUND,
            ReviewError::Unauthorized => StatusCode::UNAUTHORIZED,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(json!({"error": self.kind(), "message": self.to_string()}))).into_response()
    }
}

#[derive(Clone)]
struct AppState {
    service: Arc<ReviewService>,
    token: Option<Arc<str>>,
}

#[derive(Deserialize)]
struct FrameQuery {
    #[serde(default)]
    overlay: Option<String>,
}

async fn next_task(State(app): State<AppState>, Path(round): Path<String>) -> Result<Response, ReviewError> {
    let round = ReviewService::parse_round(&round)?;
    Ok(match app.service.next_task(round) {
        Some(task) => Json(task).into_response(),
        None => StatusCode::NO_CONTENT.into_response(),
    })
}

async fn frame(
    State(app): State<AppState>,
    Path((video_id, frame_index)): Path<(String, usize)>,
    Query(q): Query<FrameQuery>,
    headers: HeaderMap,
) -> Result<Response, ReviewError> {
    let overlay = matches!(q.overlay.as_deref(), Some("1" | "true"));
    let service = app.service.clone();
    let rendered = tokio::task::spawn_blocking(move || service.render_frame(&video_id, frame_index, overlay))
        .await
        .map_err(|e| ReviewError::Render(e.to_string()))??;
    let etag = format!("\"{}\"", rendered.etag);
    if headers
        .get(header::IF_NONE_MATCH)
        .is_some_and(|v| v.as_bytes() == etag.as_bytes())
    {
        return Ok((StatusCode::NOT_MODIFIED, [(header::ETAG, etag)]).into_response());
    }
    Ok((
        [(header::CONTENT_TYPE, "image/png".to_string()), (header::ETAG, etag)],
        Body::from(rendered.png.as_ref().clone()),
    )
        .into_response())
}

async fn submit(State(app): State<AppState>, Json(body): Json<Submission>) -> Result<Response, ReviewError> {
    let service = app.service.clone();
    let ack = tokio::task::spawn_blocking(move || service.submit(body.into_decision()))
        .await
        .map_err(|e| ReviewError::Serve(e.to_string()))??;
    Ok(Json(ack).into_response())
}

async fn progress(State(app): State<AppState>) -> Response {
    Json(app.service.progress()).into_response()
}

async fn dataset(State(app): State<AppState>) -> Response {
    Json(app.service.dataset()).into_response()
}

async fn decisions(State(app): State<AppState>) -> Response {
    Json(app.service.decisions()).into_response()
}

async fn require_token(State(app): State<AppState>, req: Request, next: Next) -> Result<Response, ReviewError> {
    if let Some(token) = &app.token {
        let ok = req
            .headers()
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .is_some_and(|t| t == token.as_ref());
        if !ok {
            return Err(ReviewError::Unauthorized);
        }
    }
    Ok(next.run(req).await)
}

pub fn router(service: Arc<ReviewService>, token: Option<String>) -> Router {
    let app = AppState {
        service,
        token: token.map(Into::into),
    };
    Router::new()
        .route("/rounds/{round}/next", get(next_task))
        .route("/frames/{video_id}/{frame_index}", get(frame))
        .route("/decisions", post(submit).get(decisions))
        .route("/progress", get(progress))
        .route("/dataset", get(dataset))
        .route_layer(middleware::from_fn_with_state(app.clone(), require_token))
        .with_state(app)
}

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub dataset: PathBuf,
    pub log: PathBuf,
    pub addr: SocketAddr,
    pub token: Option<String>,
    /// Directory of `<video_id>/<frame:06>.png`; synthetic frames otherwise.
    pub frames_dir: Option<PathBuf>,
}

/// Loads the dataset, replays the log and serves until ctrl-c.
pub fn serve(config: ServeConfig) -> Result<(), ReviewError> {
    let original = Dataset::load(&config.dataset)?;
    let frames: Box<dyn FrameSource> = match config.frames_dir {
        Some(root) => Box::new(PngDirFrames { root }),
        None => Box::new(SyntheticFrames),
    };
    let service = Arc::new(ReviewService::open(original, Some(&config.log), frames)?);
    let io = |e: std::io::Error| ReviewError::Serve(e.to_string());
    let rt = tokio::runtime::Runtime::new().map_err(io)?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(config.addr).await.map_err(io)?;
        eprintln!(
            "review service listening on http://{}",
            listener.local_addr().map_err(io)?
        );
        axum::serve(listener, router(service, config.token))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(io)
    })
}
